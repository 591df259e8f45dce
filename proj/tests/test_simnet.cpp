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

#include <fstream>

#include "espnet/simnet.hpp"
#include "support.hpp"

namespace espnet {
namespace {

using nlohmann::json;

json load_json(const std::string& name) {
  std::ifstream in(std::string(ESPNET_SCENARIO_DIR) + "/" + name);
  return json::parse(in);
}

/// Two sites, one NULL tunnel, a handful of packets each way.
json small_site_to_site(std::uint64_t packets = 40) {
  json j = load_json("site_to_site_null.json");
  for (auto& f : j["traffic"]) {
    f["packets"] = packets;
    f["payload_size"] = 64;
  }
  return j;
}

Scenario scenario_of(const json& j) {
  Scenario s = parse_scenario(j);
  validate(s);
  return s;
}

void expect_validation_error(const json& j, const std::string& path) {
  try {
    validate(parse_scenario(j));
    FAIL() << "expected validation error at " << path;
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ValidationError);
    EXPECT_NE(std::string(e.what()).find(path), std::string::npos) << e.what();
  }
}

TEST(Scenario, BuildsNodesAndLinks) {
  auto net = build_simnet(scenario_of(small_site_to_site()));
  EXPECT_EQ(net->node_count(), 4u);
  EXPECT_EQ(net->link_count(), 6u);
  EXPECT_EQ(net->switch_node("s1").table(TableId::LpmFwd).size(), 1u);
}

TEST(Scenario, ShippedScenariosValidate) {
  for (const char* name : {"site_to_site_null.json", "site_to_site_aes.json", "rekey.json", "goodput.json",
                           "host_to_site.json"}) {
    EXPECT_NO_THROW(validate(load_scenario(std::string(ESPNET_SCENARIO_DIR) + "/" + name))) << name;
  }
}

TEST(Scenario, DanglingReferencesNameTheirPath) {
  json j = small_site_to_site();
  j["links"][2]["to"]["node"] = "s9";
  expect_validation_error(j, "links[2].to.node");

  j = small_site_to_site();
  j["traffic"][1]["src_host"] = "nobody";
  expect_validation_error(j, "traffic[1].src_host");

  j = small_site_to_site();
  j["profiles"][0]["right_peer"]["switch_id"] = "s7";
  expect_validation_error(j, "profiles[0]");

  j = small_site_to_site();
  j["switches"][1]["id"] = "s1";
  expect_validation_error(j, "switches[1].id");

  j = small_site_to_site();
  j["traffic"][0]["payload_size"] = 4;
  expect_validation_error(j, "traffic[0].payload_size");
}

TEST(Scenario, TypeErrorsNameTheirPath) {
  json j = small_site_to_site();
  j["switches"][0]["ports"][1]["port"] = "two";
  try {
    parse_scenario(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("switches[0].ports[1].port"), std::string::npos) << e.what();
  }
}

TEST(Simulation, SmallTunnelDeliversEverything) {
  RunReport r = build_simnet(scenario_of(small_site_to_site()))->run();
  ASSERT_EQ(r.flows.size(), 2u);
  for (const auto& f : r.flows) {
    EXPECT_EQ(f.sent, 40u);
    EXPECT_EQ(f.delivered, 40u);
    EXPECT_EQ(f.dropped(), 0u);
    EXPECT_EQ(f.traffic_class, "NULL");
  }
  EXPECT_TRUE(r.payload_integrity);
  EXPECT_TRUE(r.conserved);
  EXPECT_EQ(r.control_message_counts["setup"]["dec_insert"], 2u);
  EXPECT_EQ(r.control_message_counts["setup"]["enc_insert"], 2u);
  EXPECT_EQ(r.control_message_counts["setup"]["spd_insert"], 2u);
  EXPECT_EQ(r.tunnels[0]["status"], "established");
}

TEST(Simulation, SameSeedSameReportAndTrace) {
  Scenario s = scenario_of(small_site_to_site());
  SimOptions opts{true, false};
  auto a = build_simnet(s, 3, opts);
  auto b = build_simnet(s, 3, opts);
  std::string ra = to_json(a->run()).dump();
  std::string rb = to_json(b->run()).dump();
  EXPECT_EQ(ra, rb);
  ASSERT_EQ(a->trace().size(), b->trace().size());
  for (std::size_t i = 0; i < a->trace().size(); ++i) {
    ASSERT_EQ(to_json(a->trace()[i]).dump(), to_json(b->trace()[i]).dump()) << i;
  }
  auto c = build_simnet(s, 4, opts);
  c->run();
  EXPECT_NE(to_json(c->controller().trace().front()).dump() + std::to_string(c->controller().tunnel("s1-s2")->sa_i.spi),
            to_json(a->controller().trace().front()).dump() + std::to_string(a->controller().tunnel("s1-s2")->sa_i.spi));
}

TEST(Simulation, ParallelRunsMatchSequentialRuns) {
  Scenario s = scenario_of(small_site_to_site(10));
  auto parallel = run_many(s, 20, 4, 4);
  ASSERT_EQ(parallel.size(), 4u);
  for (std::uint32_t i = 0; i < 4; ++i) {
    EXPECT_EQ(parallel[i].seed, 20u + i);
    EXPECT_EQ(to_json(parallel[i]).dump(), to_json(build_simnet(s, 20 + i)->run()).dump());
  }
  json combined = combined_report(s, 20, parallel, false);
  EXPECT_EQ(combined["runs"].size(), 4u);
  EXPECT_FALSE(combined.contains("timings"));
}

TEST(Simulation, TimingsOnlyWhenRequested) {
  Scenario s = scenario_of(small_site_to_site(5));
  RunReport r = build_simnet(s, 1, SimOptions{false, true})->run();
  EXPECT_FALSE(to_json(r, false).contains("timings"));
  EXPECT_TRUE(to_json(r, true).contains("timings"));
  EXPECT_FALSE(r.timings.setup_ms.empty());
}

TEST(Simulation, StaticBypassDeliversPlaintext) {
  json j = small_site_to_site(1000);
  j["profiles"] = json::array();
  j["switches"][0]["spd"] = json::array({{{"src", "10.0.1.0/24"}, {"dst", "10.0.2.0/24"}, {"priority", 10}, {"action", "bypass"}}});
  j["switches"][0]["routes"].push_back({{"prefix", "10.0.2.0/24"}, {"next_hop_mac", "02:00:00:00:a2:02"}, {"port", 2}});
  j["switches"][1]["spd"] = json::array({{{"src", "10.0.1.0/24"}, {"dst", "10.0.2.0/24"}, {"priority", 10}, {"action", "bypass"}}});
  j["traffic"] = json::array({{{"id", "plain"}, {"src_host", "h1"}, {"dst", "10.0.2.10"}, {"packets", 1000},
                              {"payload_size", 100}, {"mode", "bypass"}}});
  RunReport r = build_simnet(scenario_of(j))->run();
  ASSERT_EQ(r.flows.size(), 1u);
  EXPECT_EQ(r.flows[0].delivered, 1000u);
  EXPECT_EQ(r.flows[0].traffic_class, "BYPASS");
  EXPECT_TRUE(r.ordering_holds);
  EXPECT_TRUE(r.payload_integrity);
}

TEST(Simulation, NoPolicyDropsEverything) {
  json j = small_site_to_site(50);
  j["profiles"] = json::array();
  for (auto& f : j["traffic"]) f["mode"] = "bypass";
  RunReport r = build_simnet(scenario_of(j))->run();
  for (const auto& f : r.flows) {
    EXPECT_EQ(f.delivered, 0u);
    EXPECT_EQ(f.drops.at("no_spd_match"), 50u);
    EXPECT_TRUE(f.conserved());
  }
}

TEST(Simulation, OfflineSwitchRollsBackSetup) {
  json j = small_site_to_site(5);
  j["offline"] = json::array({"s2"});
  RunReport r = build_simnet(scenario_of(j))->run();
  EXPECT_EQ(r.tunnels[0]["status"], "down");
  EXPECT_FALSE(r.warnings.empty());
  EXPECT_GT(r.control_message_counts["rollback"]["dec_delete"], 0u);
  for (const auto& f : r.flows) {
    EXPECT_EQ(f.delivered, 0u);
    EXPECT_TRUE(f.conserved());
  }
}

TEST(Simulation, RekeyUnderLoadLosesNothing) {
  json j = small_site_to_site(700);
  j["profiles"][0]["sa_params"] = {{"suite", "AES_CTR_HMAC_MD5"}, {"soft_limit", 100}, {"hard_limit", 110}};
  RunReport r = build_simnet(scenario_of(j))->run();
  // each SA carries between soft and hard packets
  EXPECT_GE(r.rekey_count, 2u * (700 / 110));
  EXPECT_LE(r.rekey_count, 2u * (700 / 100));
  EXPECT_EQ(r.rekey_attributable_drops, 0u);
  for (const auto& f : r.flows) EXPECT_EQ(f.delivered, 700u);
  EXPECT_EQ(r.control_message_counts["renew"]["dec_insert"], r.rekey_count);
  EXPECT_EQ(r.control_message_counts["renew"]["enc_modify"], r.rekey_count);
  EXPECT_EQ(r.control_message_counts["renew"]["dec_delete"], r.rekey_count);
}

TEST(Simulation, RoadwarriorScenario) {
  Scenario s = load_scenario(std::string(ESPNET_SCENARIO_DIR) + "/host_to_site.json");
  validate(s);
  auto net = build_simnet(s);
  RunReport r = net->run();
  for (const auto& f : r.flows) {
    EXPECT_EQ(f.delivered, f.sent) << f.id;
  }
  EXPECT_GT(r.rekey_count, 0u);
  EXPECT_EQ(r.rekey_attributable_drops, 0u);
  ASSERT_NE(net->agent("rw1"), nullptr);
  EXPECT_TRUE(net->agent("rw1")->errors().empty());
  EXPECT_FALSE(net->host_stack("rw1")->outbound().empty());
}

TEST(Payload, DeterministicAndDistinct) {
  EXPECT_EQ(make_payload(1, 2, 64), make_payload(1, 2, 64));
  EXPECT_NE(make_payload(1, 2, 64), make_payload(1, 3, 64));
  EXPECT_NE(make_payload(0, 2, 64), make_payload(1, 2, 64));
  Bytes p = make_payload(3, 0x01020304, 8);
  EXPECT_EQ(load_be32(p.data()), 3u);
  EXPECT_EQ(load_be32(p.data() + 4), 0x01020304u);
}

}  // namespace
}  // namespace espnet
