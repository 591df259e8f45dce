// Copyright 2026 The espnet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "espnet/controller.hpp"
#include "fabric.hpp"
#include "support.hpp"

namespace espnet {
namespace {

using testing::ip;
using testing::mac;
using testing::prefix;

TunnelProfile site_profile(const std::string& id = "s1-s2", CipherSuite suite = CipherSuite::AesCtrHmacMd5,
                           bool with_routes = true) {
  TunnelProfile p;
  p.profile_id = id;
  p.mode = TunnelMode::SiteToSite;
  p.traffic_selector = {prefix("10.0.1.0/24"), prefix("10.0.2.0/24"), std::nullopt};
  SwitchPeer left{"s1", ip("192.0.2.1"), prefix("10.0.1.0/24"), {}};
  SwitchPeer right{"s2", ip("192.0.2.2"), prefix("10.0.2.0/24"), {}};
  if (with_routes) {
    left.routes = {{prefix("192.0.2.2/32"), mac("02:00:00:00:a2:02"), 2}};
    right.routes = {{prefix("192.0.2.1/32"), mac("02:00:00:00:a1:02"), 2}};
  }
  p.left_peer = left;
  p.right_peer = right;
  p.sa_params = {suite, 100, 110};
  return p;
}

class ControllerTest : public ::testing::Test {
 protected:
  ControllerTest()
      : s1(SwitchConfig{"s1", {{1, mac("02:00:00:00:a1:01")}, {2, mac("02:00:00:00:a1:02")}}, 16}),
        s2(SwitchConfig{"s2", {{1, mac("02:00:00:00:a2:01")}, {2, mac("02:00:00:00:a2:02")}}, 16}),
        ctl(fabric, 99) {
    fabric.controller = &ctl;
    fabric.switches = {{"s1", &s1}, {"s2", &s2}};
    ctl.add_switch("s1", 16);
    ctl.add_switch("s2", 16);
  }

  std::vector<TraceRecord> records(JobKind kind) const {
    std::vector<TraceRecord> out;
    for (const auto& r : ctl.trace()) {
      if (r.job_kind == kind) out.push_back(r);
    }
    return out;
  }

  void establish(const TunnelProfile& p = site_profile()) {
    ctl.add_profile(p);
    ctl.setup_tunnel(p.profile_id);
    fabric.pump();
    ASSERT_EQ(ctl.tunnel(p.profile_id)->status, TunnelStatus::Established);
  }

  testing::Fabric fabric;
  Switch s1;
  Switch s2;
  Controller ctl;
};

std::size_t index_of(const std::vector<TraceRecord>& trace, const std::string& target, ControlStep step) {
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace[i].target == target && trace[i].step == step) return i;
  }
  return SIZE_MAX;
}

TEST_F(ControllerTest, SetupOrderAndCounts) {
  establish();
  auto setup = records(JobKind::Setup);
  ASSERT_EQ(setup.size(), 6u + 2u);
  for (const auto& r : setup) {
    EXPECT_EQ(r.op, "insert");
    EXPECT_EQ(r.ok, true);
  }
  for (const char* peer : {"s1", "s2"}) {
    std::size_t dec = index_of(setup, peer, ControlStep::DecInsert);
    std::size_t enc = index_of(setup, peer, ControlStep::EncInsert);
    std::size_t spd = index_of(setup, peer, ControlStep::SpdInsert);
    std::size_t route = index_of(setup, peer, ControlStep::RouteInsert);
    ASSERT_NE(spd, SIZE_MAX);
    EXPECT_LT(dec, enc);
    EXPECT_LT(enc, spd);
    EXPECT_LT(enc, route);
  }
  // every DEC insert is acknowledged before any ENC insert is sent
  EXPECT_EQ(setup[0].step, ControlStep::DecInsert);
  EXPECT_EQ(setup[1].step, ControlStep::DecInsert);
  EXPECT_EQ(setup[2].step, ControlStep::EncInsert);
  EXPECT_EQ(setup[3].step, ControlStep::EncInsert);

  const TunnelState& t = *ctl.tunnel("s1-s2");
  EXPECT_EQ(t.sa_i.tunnel_src, ip("192.0.2.1"));
  EXPECT_EQ(t.sa_j.tunnel_src, ip("192.0.2.2"));
  EXPECT_NE(t.sa_i.spi, t.sa_j.spi);
  EXPECT_GE(std::min(t.sa_i.spi, t.sa_j.spi), kMinSpi);
  EXPECT_EQ(t.sa_i.register_index, 0u);
  EXPECT_EQ(t.sa_j.register_index, 1u);
  EXPECT_EQ(sa_from_action(s1.table(TableId::SadEnc).find(sad_enc_key(prefix("10.0.2.0/24")))->action), t.sa_i);
  EXPECT_NE(s2.table(TableId::SadDec).find(sad_dec_key(ip("192.0.2.1"), ip("192.0.2.2"), t.sa_i.spi)), nullptr);
  EXPECT_NE(s1.table(TableId::SadDec).find(sad_dec_key(ip("192.0.2.2"), ip("192.0.2.1"), t.sa_j.spi)), nullptr);
  const TableEntry* spd = s2.table(TableId::Spd).find(spd_key(prefix("10.0.2.0/24"), prefix("10.0.1.0/24"), std::nullopt));
  ASSERT_NE(spd, nullptr);
  EXPECT_EQ(spd->priority, 1000);
  EXPECT_TRUE(ctl.idle());
  EXPECT_EQ(ctl.metrics().key_generations, 2u);
  EXPECT_EQ(ctl.metrics().setup_ms.size(), 1u);
}

TEST_F(ControllerTest, SetupWithoutRoutesIsSixInserts) {
  establish(site_profile("bare", CipherSuite::Null, false));
  EXPECT_EQ(records(JobKind::Setup).size(), 6u);
}

TEST_F(ControllerTest, RenewalSequence) {
  establish();
  SecurityAssociation old_i = ctl.tunnel("s1-s2")->sa_i;
  ctl.on_notification({"s1", old_i.spi, Direction::Enc});
  fabric.pump();
  auto renew = records(JobKind::Renew);
  ASSERT_EQ(renew.size(), 3u);
  EXPECT_EQ(renew[0].step, ControlStep::DecInsert);
  EXPECT_EQ(renew[0].target, "s2");
  EXPECT_EQ(renew[1].step, ControlStep::EncModify);
  EXPECT_EQ(renew[1].target, "s1");
  EXPECT_EQ(renew[1].op, "modify");
  EXPECT_EQ(renew[2].step, ControlStep::DecDelete);
  EXPECT_EQ(renew[2].target, "s2");
  EXPECT_EQ(renew[2].spi, old_i.spi);
  EXPECT_EQ(renew[0].spi, renew[1].spi);

  const TunnelState& t = *ctl.tunnel("s1-s2");
  EXPECT_EQ(t.renewals, 1u);
  EXPECT_EQ(t.status, TunnelStatus::Established);
  EXPECT_NE(t.sa_i.spi, old_i.spi);
  EXPECT_EQ(t.sa_i.register_index, 2u);
  EXPECT_EQ(s2.table(TableId::SadDec).find(sad_dec_key(old_i.tunnel_src, old_i.tunnel_dst, old_i.spi)), nullptr);
  EXPECT_NE(s2.table(TableId::SadDec).find(sad_dec_key(t.sa_i.tunnel_src, t.sa_i.tunnel_dst, t.sa_i.spi)), nullptr);
  EXPECT_EQ(sa_from_action(s1.table(TableId::SadEnc).find(sad_enc_key(prefix("10.0.2.0/24")))->action), t.sa_i);
  EXPECT_EQ(ctl.metrics().renewal_ms.size(), 1u);
}

TEST_F(ControllerTest, RenewingTheReverseSaTargetsTheOtherSide) {
  establish();
  SecurityAssociation old_j = ctl.tunnel("s1-s2")->sa_j;
  ctl.on_notification({"s2", old_j.spi, Direction::Enc});
  fabric.pump();
  auto renew = records(JobKind::Renew);
  ASSERT_EQ(renew.size(), 3u);
  EXPECT_EQ(renew[0].target, "s1");
  EXPECT_EQ(renew[1].target, "s2");
  EXPECT_EQ(renew[2].target, "s1");
  EXPECT_NE(ctl.tunnel("s1-s2")->sa_j.spi, old_j.spi);
}

TEST_F(ControllerTest, DuplicateAndLateNotificationsAreIgnored) {
  establish();
  std::uint32_t spi = ctl.tunnel("s1-s2")->sa_i.spi;
  ctl.on_notification({"s1", spi, Direction::Enc});
  ctl.on_notification({"s2", spi, Direction::Dec});
  fabric.pump();
  ctl.on_notification({"s2", spi, Direction::Dec});
  fabric.pump();
  EXPECT_EQ(ctl.tunnel("s1-s2")->renewals, 1u);
  EXPECT_EQ(records(JobKind::Renew).size(), 3u);
  EXPECT_EQ(ctl.metrics().duplicate_notifications, 2u);
  EXPECT_FALSE(ctl.renew_sa(spi));
}

TEST_F(ControllerTest, UnknownSpiNotification) {
  establish();
  try {
    ctl.renew_sa(12345);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownSpi);
  }
  ctl.on_notification({"s1", 12345, Direction::Enc});
  EXPECT_EQ(ctl.metrics().unknown_spi_notifications, 1u);
  EXPECT_TRUE(ctl.idle());
}

TEST_F(ControllerTest, JobsForOneTunnelNeverInterleave) {
  establish();
  const TunnelState& t = *ctl.tunnel("s1-s2");
  ctl.on_notification({"s1", t.sa_i.spi, Direction::Enc});
  ctl.on_notification({"s2", t.sa_j.spi, Direction::Enc});
  fabric.pump();
  auto renew = records(JobKind::Renew);
  ASSERT_EQ(renew.size(), 6u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(renew[i].job_id, renew[0].job_id);
    EXPECT_EQ(renew[i + 3].job_id, renew[3].job_id);
  }
  EXPECT_NE(renew[0].job_id, renew[3].job_id);
  EXPECT_EQ(ctl.tunnel("s1-s2")->renewals, 2u);
}

TEST_F(ControllerTest, DeleteOrderAndCleanup) {
  establish();
  ctl.delete_tunnel("s1-s2");
  fabric.pump();
  auto del = records(JobKind::Delete);
  ASSERT_EQ(del.size(), 8u);
  for (const char* peer : {"s1", "s2"}) {
    EXPECT_LT(index_of(del, peer, ControlStep::SpdDelete), index_of(del, peer, ControlStep::EncDelete));
    EXPECT_LT(index_of(del, peer, ControlStep::EncDelete), index_of(del, peer, ControlStep::DecDelete));
  }
  EXPECT_EQ(ctl.tunnel("s1-s2")->status, TunnelStatus::Down);
  for (Switch* sw : {&s1, &s2}) {
    for (TableId id : kAllTables) EXPECT_EQ(sw->table(id).size(), 0u) << sw->id() << " " << table_name(id);
  }
  EXPECT_TRUE(ctl.warnings().empty());
  // registers are free again
  establish();
  EXPECT_EQ(ctl.tunnel("s1-s2")->sa_i.register_index, 0u);
}

TEST_F(ControllerTest, DeleteRetriesUnreachablePeerThenWarns) {
  establish();
  fabric.offline.insert("s2");
  ctl.delete_tunnel("s1-s2");
  fabric.pump();
  auto del = records(JobKind::Delete);
  std::size_t s2_attempts = std::count_if(del.begin(), del.end(), [](const auto& r) { return r.target == "s2"; });
  EXPECT_EQ(s2_attempts, 4u * 4u);  // SPD, route, ENC, DEC; one try plus three retries each
  EXPECT_EQ(ctl.tunnel("s1-s2")->status, TunnelStatus::Down);
  EXPECT_EQ(ctl.tunnel("s1-s2")->warnings.size(), 4u);
  EXPECT_EQ(s1.table(TableId::SadDec).size(), 0u);
}

TEST_F(ControllerTest, DeleteTreatsMissingEntriesAsDone) {
  establish();
  s1.table_delete(TableId::Spd, spd_key(prefix("10.0.1.0/24"), prefix("10.0.2.0/24"), std::nullopt));
  ctl.delete_tunnel("s1-s2");
  fabric.pump();
  EXPECT_TRUE(ctl.warnings().empty());
  EXPECT_EQ(ctl.tunnel("s1-s2")->status, TunnelStatus::Down);
}

TEST_F(ControllerTest, UnreachablePeerRollsBackSetup) {
  fabric.offline.insert("s2");
  ctl.add_profile(site_profile());
  ctl.setup_tunnel("s1-s2");
  fabric.pump();
  EXPECT_EQ(ctl.tunnel("s1-s2")->status, TunnelStatus::Down);
  EXPECT_FALSE(ctl.warnings().empty());
  EXPECT_EQ(s1.table(TableId::SadDec).size(), 0u);
  auto rollback = records(JobKind::Rollback);
  ASSERT_EQ(rollback.size(), 1u);
  EXPECT_EQ(rollback[0].step, ControlStep::DecDelete);
  EXPECT_EQ(rollback[0].target, "s1");
  EXPECT_TRUE(ctl.idle());

  fabric.offline.clear();
  ctl.setup_tunnel("s1-s2");
  fabric.pump();
  EXPECT_EQ(ctl.tunnel("s1-s2")->status, TunnelStatus::Established);
  EXPECT_EQ(ctl.tunnel("s1-s2")->sa_i.register_index, 0u);
}

TEST_F(ControllerTest, LatePhaseFailureUndoesEverythingInReverse) {
  // a conflicting SPD entry on s2 makes the last setup phase fail
  s2.table_insert(TableId::Spd, {spd_key(prefix("10.0.2.0/24"), prefix("10.0.1.0/24"), std::nullopt), 5,
                                 spd_mark_action(SpdMark::Bypass)});
  ctl.add_profile(site_profile());
  ctl.setup_tunnel("s1-s2");
  fabric.pump();
  EXPECT_EQ(ctl.tunnel("s1-s2")->status, TunnelStatus::Down);
  auto rollback = records(JobKind::Rollback);
  ASSERT_FALSE(rollback.empty());
  std::size_t enc = index_of(rollback, "s1", ControlStep::EncDelete);
  std::size_t dec = index_of(rollback, "s1", ControlStep::DecDelete);
  std::size_t spd = index_of(rollback, "s1", ControlStep::SpdDelete);
  EXPECT_LT(spd, enc);
  EXPECT_LT(enc, dec);
  EXPECT_EQ(s1.table(TableId::Spd).size(), 0u);
  EXPECT_EQ(s1.table(TableId::SadEnc).size(), 0u);
  EXPECT_EQ(s1.table(TableId::SadDec).size(), 0u);
  EXPECT_EQ(s1.table(TableId::LpmFwd).size(), 0u);
  EXPECT_EQ(s2.table(TableId::Spd).size(), 1u);
  EXPECT_EQ(s2.table(TableId::SadEnc).size(), 0u);
  EXPECT_EQ(s2.table(TableId::SadDec).size(), 0u);
}

TEST_F(ControllerTest, FailedRenewalKeepsTheOldSa) {
  establish();
  SecurityAssociation old_i = ctl.tunnel("s1-s2")->sa_i;
  fabric.offline.insert("s1");  // ENC modify cannot be delivered
  ctl.on_notification({"s2", old_i.spi, Direction::Dec});
  fabric.pump();
  const TunnelState& t = *ctl.tunnel("s1-s2");
  EXPECT_EQ(t.sa_i, old_i);
  EXPECT_EQ(t.status, TunnelStatus::Established);
  EXPECT_EQ(t.renewals, 0u);
  EXPECT_EQ(s2.table(TableId::SadDec).size(), 1u);
  // the SPI may be renewed again once the peer is back
  fabric.offline.clear();
  EXPECT_TRUE(ctl.renew_sa(old_i.spi));
  fabric.pump();
  EXPECT_EQ(ctl.tunnel("s1-s2")->renewals, 1u);
}

TEST_F(ControllerTest, ReplayingTheTraceReproducesTables) {
  establish();
  ctl.on_notification({"s1", ctl.tunnel("s1-s2")->sa_i.spi, Direction::Enc});
  fabric.pump();
  ctl.on_notification({"s1", ctl.tunnel("s1-s2")->sa_j.spi, Direction::Dec});
  fabric.pump();
  Switch r1(s1.config());
  Switch r2(s2.config());
  std::map<std::string, Switch*> replicas{{"s1", &r1}, {"s2", &r2}};
  replay_trace(ctl.trace(), replicas);
  EXPECT_EQ(r1.snapshot()["tables"], s1.snapshot()["tables"]);
  EXPECT_EQ(r2.snapshot()["tables"], s2.snapshot()["tables"]);
}

TEST_F(ControllerTest, TraceRecordsSerialize) {
  establish();
  nlohmann::json j = to_json(ctl.trace().front());
  EXPECT_EQ(j["step"], "dec_insert");
  EXPECT_EQ(j["job"], "setup");
  EXPECT_EQ(j["table"], "SAD-DEC");
  EXPECT_EQ(j["ok"], true);
  nlohmann::json status = ctl.status_snapshot();
  ASSERT_EQ(status.size(), 1u);
  EXPECT_EQ(status[0]["status"], "established");
  EXPECT_EQ(status.dump().find("aes_key"), std::string::npos);
}

TEST_F(ControllerTest, RejectsProfilesForUnknownSwitches) {
  TunnelProfile p = site_profile();
  p.right_peer.switch_id = "s9";
  EXPECT_THROW(ctl.add_profile(p), Error);
  try {
    ctl.setup_tunnel("nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownProfile);
  }
}

TEST(SpiAllocation, TenThousandPairsAreDistinct) {
  testing::Fabric fabric;
  Controller ctl(fabric, 5);
  ctl.add_switch("s1", 1u << 16);
  ctl.add_switch("s2", 1u << 16);
  ctl.add_profile(site_profile("p", CipherSuite::Null, false));
  std::set<std::uint32_t> spis;
  std::set<std::uint32_t> registers;
  for (int i = 0; i < 10000; ++i) {
    auto [a, b] = ctl.generate_sa_pair(ctl.profile("p"));
    ASSERT_GE(a.spi, kMinSpi);
    ASSERT_GE(b.spi, kMinSpi);
    spis.insert(a.spi);
    spis.insert(b.spi);
    registers.insert(a.register_index);
    registers.insert(b.register_index);
  }
  EXPECT_EQ(spis.size(), 20000u);
  EXPECT_EQ(registers.size(), 20000u);
}

TEST(SpiAllocation, ExhaustionIsReported) {
  SpiAllocator alloc(256, 259, 1000);
  SeededRandom rng(1);
  std::set<std::uint32_t> got;
  for (int i = 0; i < 4; ++i) got.insert(alloc.allocate(rng));
  EXPECT_EQ(got, (std::set<std::uint32_t>{256, 257, 258, 259}));
  try {
    alloc.allocate(rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SpiExhaustion);
  }
}

TEST(SpiAllocation, SameSeedSameAssociations) {
  testing::Fabric f1;
  testing::Fabric f2;
  Controller a(f1, 77);
  Controller b(f2, 77);
  for (Controller* c : {&a, &b}) {
    c->add_switch("s1");
    c->add_switch("s2");
    c->add_profile(site_profile());
  }
  EXPECT_EQ(a.generate_sa_pair(a.profile("s1-s2")), b.generate_sa_pair(b.profile("s1-s2")));
}

TEST(SpiAllocation, RegisterExhaustion) {
  testing::Fabric fabric;
  Controller ctl(fabric, 5);
  ctl.add_switch("s1", 3);
  ctl.add_switch("s2", 3);
  ctl.add_profile(site_profile());
  ctl.generate_sa_pair(ctl.profile("s1-s2"));
  try {
    ctl.generate_sa_pair(ctl.profile("s1-s2"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IndexOutOfRange);
  }
}

}  // namespace
}  // namespace espnet
