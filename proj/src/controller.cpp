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

#include "espnet/controller.hpp"

#include <algorithm>

namespace espnet {

namespace {

constexpr int kMaxDeleteAttempts = 4;  // first try + 3 retries
constexpr std::int64_t kFirstTunnelSpdPriority = 1000;

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

ControlStep delete_step_for(ControlStep insert) {
  switch (insert) {
    case ControlStep::DecInsert: return ControlStep::DecDelete;
    case ControlStep::EncInsert: return ControlStep::EncDelete;
    case ControlStep::SpdInsert: return ControlStep::SpdDelete;
    case ControlStep::RouteInsert: return ControlStep::RouteDelete;
    default: return insert;
  }
}

std::string_view op_name(const std::variant<SwitchRequest, AgentMessage>& payload) {
  if (const auto* r = std::get_if<SwitchRequest>(&payload)) {
    switch (r->op) {
      case SwitchRequest::Op::Insert: return "insert";
      case SwitchRequest::Op::Modify: return "modify";
      case SwitchRequest::Op::Delete: return "delete";
      case SwitchRequest::Op::RegisterWrite: return "register_write";
    }
  }
  const auto& m = std::get<AgentMessage>(payload);
  if (std::holds_alternative<Teardown>(m)) return "teardown";
  return "config_apply";
}

nlohmann::json sa_summary(const SecurityAssociation& sa) {
  return {{"spi", sa.spi},
          {"tunnel_src", sa.tunnel_src.to_string()},
          {"tunnel_dst", sa.tunnel_dst.to_string()},
          {"suite", to_string(sa.suite)},
          {"register_index", sa.register_index},
          {"soft_limit", sa.soft_limit},
          {"hard_limit", sa.hard_limit}};
}

}  // namespace

std::string_view to_string(SwitchRequest::Op op) {
  switch (op) {
    case SwitchRequest::Op::Insert: return "insert";
    case SwitchRequest::Op::Modify: return "modify";
    case SwitchRequest::Op::Delete: return "delete";
    case SwitchRequest::Op::RegisterWrite: return "register_write";
  }
  return "?";
}

SwitchResponse apply_request(Switch& sw, const SwitchRequest& request) {
  SwitchResponse response{request.request_id, true, ErrorCode::ParseError, {}};
  try {
    switch (request.op) {
      case SwitchRequest::Op::Insert: sw.table_insert(request.table, request.entry); break;
      case SwitchRequest::Op::Modify: sw.table_modify(request.table, request.entry.key, request.entry.action); break;
      case SwitchRequest::Op::Delete: sw.table_delete(request.table, request.entry.key); break;
      case SwitchRequest::Op::RegisterWrite: sw.register_write(request.register_index, request.register_value); break;
    }
  } catch (const Error& e) {
    response.ok = false;
    response.code = e.code();
    response.message = e.what();
  }
  return response;
}

std::string_view to_string(ControlStep step) {
  switch (step) {
    case ControlStep::DecInsert: return "dec_insert";
    case ControlStep::EncInsert: return "enc_insert";
    case ControlStep::SpdInsert: return "spd_insert";
    case ControlStep::RouteInsert: return "route_insert";
    case ControlStep::EncModify: return "enc_modify";
    case ControlStep::DecDelete: return "dec_delete";
    case ControlStep::EncDelete: return "enc_delete";
    case ControlStep::SpdDelete: return "spd_delete";
    case ControlStep::RouteDelete: return "route_delete";
    case ControlStep::ConfigApply: return "config_apply";
    case ControlStep::Teardown: return "teardown";
  }
  return "?";
}

std::string_view to_string(JobKind kind) {
  switch (kind) {
    case JobKind::Setup: return "setup";
    case JobKind::Renew: return "renew";
    case JobKind::Delete: return "delete";
    case JobKind::Rollback: return "rollback";
  }
  return "?";
}

std::string_view to_string(TunnelStatus s) {
  switch (s) {
    case TunnelStatus::SettingUp: return "setting_up";
    case TunnelStatus::Established: return "established";
    case TunnelStatus::Renewing: return "renewing";
    case TunnelStatus::Deleting: return "deleting";
    case TunnelStatus::Down: return "down";
  }
  return "?";
}

nlohmann::json to_json(const TraceRecord& r) {
  nlohmann::json j{{"seq", r.seq},
                   {"time", r.time},
                   {"job_id", r.job_id},
                   {"job", to_string(r.job_kind)},
                   {"profile_id", r.profile_id},
                   {"target", r.target},
                   {"step", to_string(r.step)},
                   {"op", r.op}};
  if (!r.table.empty()) j["table"] = r.table;
  if (r.spi != 0) j["spi"] = r.spi;
  j["ok"] = r.ok ? nlohmann::json(*r.ok) : nlohmann::json(nullptr);
  return j;
}

SpiAllocator::SpiAllocator(std::uint32_t lo, std::uint32_t hi, std::size_t max_attempts)
    : lo_(std::max(lo, kMinSpi)), hi_(hi), max_attempts_(max_attempts) {
  if (lo_ > hi_) throw Error(ErrorCode::InvariantViolation, "empty SPI range");
}

std::uint32_t SpiAllocator::allocate(RandomSource& rng) {
  std::uint64_t span = std::uint64_t{hi_} - lo_ + 1;
  for (std::size_t attempt = 0; attempt < max_attempts_; ++attempt) {
    auto candidate = static_cast<std::uint32_t>(lo_ + rng.next_u64() % span);
    if (allocated_.insert(candidate).second) return candidate;
  }
  throw Error(ErrorCode::SpiExhaustion,
              "no free SPI after " + std::to_string(max_attempts_) + " attempts (" +
                  std::to_string(allocated_.size()) + " issued)");
}

Controller::Controller(ControllerTransport& transport, std::uint64_t seed, Clock clock)
    : Controller(transport, std::make_unique<SeededRandom>(seed), std::move(clock)) {}

Controller::Controller(ControllerTransport& transport, std::unique_ptr<RandomSource> rng, Clock clock)
    : transport_(transport), rng_(std::move(rng)), clock_(std::move(clock)) {}

void Controller::add_switch(const std::string& switch_id, std::size_t register_size) {
  register_size_[switch_id] = register_size;
  registers_used_[switch_id];
  next_spd_priority_.emplace(switch_id, kFirstTunnelSpdPriority);
}

void Controller::add_roadwarrior(RoadwarriorInfo info) {
  std::string id = info.id;
  roadwarriors_[id] = std::move(info);
}

void Controller::add_profile(const TunnelProfile& profile) {
  validate(profile);
  for (const auto& sw : switch_peers(profile)) {
    if (!register_size_.contains(sw)) {
      throw Error(ErrorCode::ValidationError, "profile '" + profile.profile_id + "' references unknown switch " + sw);
    }
  }
  if (const auto* rw = std::get_if<RoadwarriorPeer>(&profile.left_peer)) {
    if (!roadwarriors_.contains(rw->roadwarrior_id)) {
      throw Error(ErrorCode::UnknownRoadwarrior, rw->roadwarrior_id);
    }
  }
  profiles_[profile.profile_id] = profile;
}

const TunnelProfile& Controller::profile(const std::string& profile_id) const {
  auto it = profiles_.find(profile_id);
  if (it == profiles_.end()) throw Error(ErrorCode::UnknownProfile, profile_id);
  return it->second;
}

const TunnelState* Controller::tunnel(const std::string& profile_id) const {
  auto it = tunnels_.find(profile_id);
  return it == tunnels_.end() ? nullptr : &it->second;
}

std::vector<std::string> Controller::switch_peers(const TunnelProfile& p) const {
  std::vector<std::string> out;
  if (const auto* left = std::get_if<SwitchPeer>(&p.left_peer)) out.push_back(left->switch_id);
  out.push_back(p.right_peer.switch_id);
  return out;
}

Ipv4Addr Controller::left_endpoint(const TunnelProfile& p) const {
  if (const auto* left = std::get_if<SwitchPeer>(&p.left_peer)) return left->endpoint_ip;
  const auto& id = std::get<RoadwarriorPeer>(p.left_peer).roadwarrior_id;
  auto it = roadwarriors_.find(id);
  if (it == roadwarriors_.end()) throw Error(ErrorCode::UnknownRoadwarrior, id);
  return it->second.ip;
}

std::uint32_t Controller::allocate_register(const std::vector<std::string>& switches) {
  std::size_t limit = SIZE_MAX;
  std::vector<std::set<std::uint32_t>*> used;
  for (const auto& sw : switches) {
    limit = std::min(limit, register_size_.at(sw));
    used.push_back(&registers_used_[sw]);
  }
  std::uint32_t index = 0;
  for (bool moved = true; moved;) {
    moved = false;
    for (auto* set : used) {
      for (auto it = set->lower_bound(index); it != set->end() && *it == index; ++it) {
        ++index;
        moved = true;
      }
    }
  }
  if (index >= limit) throw Error(ErrorCode::IndexOutOfRange, "no free register index");
  for (auto* set : used) set->insert(index);
  return index;
}

void Controller::release_register(const std::vector<std::string>& switches, std::uint32_t index) {
  for (const auto& sw : switches) registers_used_[sw].erase(index);
}

SecurityAssociation Controller::make_sa(const TunnelProfile& p, Ipv4Addr src, Ipv4Addr dst,
                                        std::uint32_t register_index) {
  auto started = std::chrono::steady_clock::now();
  SecurityAssociation sa;
  sa.spi = spis_.allocate(*rng_);
  sa.tunnel_src = src;
  sa.tunnel_dst = dst;
  sa.suite = p.sa_params.suite;
  sa.keys = generate_key_material(p.sa_params.suite, *rng_);
  sa.register_index = register_index;
  sa.soft_limit = p.sa_params.soft_limit;
  sa.hard_limit = p.sa_params.hard_limit;
  ++metrics_.key_generations;
  metrics_.sa_generation_ms.push_back(elapsed_ms(started));
  return sa;
}

std::pair<SecurityAssociation, SecurityAssociation> Controller::generate_sa_pair(const TunnelProfile& p) {
  auto switches = switch_peers(p);
  Ipv4Addr left = left_endpoint(p);
  Ipv4Addr right = p.right_peer.endpoint_ip;
  std::uint32_t reg_i = allocate_register(switches);
  std::uint32_t reg_j = 0;
  try {
    reg_j = allocate_register(switches);
  } catch (...) {
    release_register(switches, reg_i);
    throw;
  }
  try {
    SecurityAssociation sa_i = make_sa(p, left, right, reg_i);
    SecurityAssociation sa_j = make_sa(p, right, left, reg_j);
    return {sa_i, sa_j};
  } catch (...) {
    release_register(switches, reg_i);
    release_register(switches, reg_j);
    throw;
  }
}

Controller::PendingOp Controller::switch_op(const std::string& target, ControlStep step, SwitchRequest::Op op,
                                            TableId table, TableEntry entry, std::uint32_t spi) {
  SwitchRequest request;
  request.op = op;
  request.table = table;
  request.entry = std::move(entry);
  return PendingOp{target, false, step, request, spi, 0};
}

Controller::PendingOp Controller::agent_op(const std::string& target, ControlStep step, AgentMessage message,
                                           std::uint32_t spi) {
  return PendingOp{target, true, step, std::move(message), spi, 0};
}

Controller::PendingOp Controller::undo_of(const PendingOp& op) {
  if (op.to_agent) {
    const auto& m = std::get<AgentMessage>(op.payload);
    const auto& config = std::get<ConfigApply>(m);
    return agent_op(op.target, ControlStep::Teardown, Teardown{0, config.profile_id}, op.spi);
  }
  const auto& request = std::get<SwitchRequest>(op.payload);
  TableEntry key_only;
  key_only.key = request.entry.key;
  return switch_op(op.target, delete_step_for(op.step), SwitchRequest::Op::Delete, request.table, key_only, op.spi);
}

ConfigApply Controller::host_config(const TunnelProfile& p, const SecurityAssociation& sa_in,
                                    const SecurityAssociation& sa_out, std::vector<std::uint32_t> retire) {
  ConfigApply config;
  config.profile_id = p.profile_id;
  config.sa_in = sa_in;
  config.sa_out = sa_out;
  config.traffic_selector = TrafficSelector{Ipv4Prefix{left_endpoint(p), 32}, p.traffic_selector.dst,
                                            p.traffic_selector.protocol};
  config.routes = {p.right_peer.network_resource};
  config.retire_in_spis = std::move(retire);
  return config;
}

std::vector<Controller::Phase> Controller::setup_phases(const TunnelProfile& p, const TunnelState& t) {
  using Op = SwitchRequest::Op;
  const SwitchPeer& right = p.right_peer;
  const TrafficSelector& sel = p.traffic_selector;
  auto dec_entry = [](const SecurityAssociation& sa) {
    return TableEntry{sad_dec_key(sa.tunnel_src, sa.tunnel_dst, sa.spi), 0, sad_action(Direction::Dec, sa)};
  };
  auto enc_entry = [](const Ipv4Prefix& dst, const SecurityAssociation& sa) {
    return TableEntry{sad_enc_key(dst), 0, sad_action(Direction::Enc, sa)};
  };
  auto spd_entry = [&](const std::string& sw, const Ipv4Prefix& src, const Ipv4Prefix& dst) {
    return TableEntry{spd_key(src, dst, sel.protocol), next_spd_priority_[sw]++, spd_mark_action(SpdMark::Protect)};
  };
  auto route_ops = [&](const SwitchPeer& peer, Phase& phase) {
    for (const auto& r : peer.routes) {
      phase.push_back(switch_op(peer.switch_id, ControlStep::RouteInsert, Op::Insert, TableId::LpmFwd,
                                TableEntry{lpm_fwd_key(r.prefix), 0, forward_action(r.next_hop_mac, r.port)}, 0));
    }
  };

  std::vector<Phase> phases;
  if (const auto* left = std::get_if<SwitchPeer>(&p.left_peer)) {
    phases.push_back({switch_op(left->switch_id, ControlStep::DecInsert, Op::Insert, TableId::SadDec,
                                dec_entry(t.sa_j), t.sa_j.spi),
                      switch_op(right.switch_id, ControlStep::DecInsert, Op::Insert, TableId::SadDec,
                                dec_entry(t.sa_i), t.sa_i.spi)});
    phases.push_back({switch_op(left->switch_id, ControlStep::EncInsert, Op::Insert, TableId::SadEnc,
                                enc_entry(right.network_resource, t.sa_i), t.sa_i.spi),
                      switch_op(right.switch_id, ControlStep::EncInsert, Op::Insert, TableId::SadEnc,
                                enc_entry(left->network_resource, t.sa_j), t.sa_j.spi)});
    Phase last{switch_op(left->switch_id, ControlStep::SpdInsert, Op::Insert, TableId::Spd,
                         spd_entry(left->switch_id, sel.src, sel.dst), 0),
               switch_op(right.switch_id, ControlStep::SpdInsert, Op::Insert, TableId::Spd,
                         spd_entry(right.switch_id, sel.dst, sel.src), 0)};
    route_ops(*left, last);
    route_ops(right, last);
    phases.push_back(std::move(last));
    return phases;
  }

  const auto& rw = std::get<RoadwarriorPeer>(p.left_peer).roadwarrior_id;
  Ipv4Prefix host{left_endpoint(p), 32};
  phases.push_back({switch_op(right.switch_id, ControlStep::DecInsert, Op::Insert, TableId::SadDec,
                              dec_entry(t.sa_i), t.sa_i.spi)});
  phases.push_back({agent_op(rw, ControlStep::ConfigApply, host_config(p, t.sa_j, t.sa_i), t.sa_i.spi)});
  phases.push_back({switch_op(right.switch_id, ControlStep::EncInsert, Op::Insert, TableId::SadEnc,
                              enc_entry(host, t.sa_j), t.sa_j.spi)});
  Phase last{switch_op(right.switch_id, ControlStep::SpdInsert, Op::Insert, TableId::Spd,
                       spd_entry(right.switch_id, sel.dst, host), 0)};
  route_ops(right, last);
  phases.push_back(std::move(last));
  return phases;
}

std::vector<Controller::Phase> Controller::renew_phases(const TunnelProfile& p, const TunnelState& t, SaSlot slot,
                                                        const SecurityAssociation& fresh) {
  using Op = SwitchRequest::Op;
  const SecurityAssociation& old = slot == SaSlot::I ? t.sa_i : t.sa_j;
  const SwitchPeer& right = p.right_peer;
  const auto* left_switch = std::get_if<SwitchPeer>(&p.left_peer);

  std::vector<Phase> phases(3);
  if (left_switch != nullptr) {
    const SwitchPeer& sender = slot == SaSlot::I ? *left_switch : right;
    const SwitchPeer& receiver = slot == SaSlot::I ? right : *left_switch;
    phases[0].push_back(switch_op(receiver.switch_id, ControlStep::DecInsert, Op::Insert, TableId::SadDec,
                                  TableEntry{sad_dec_key(fresh.tunnel_src, fresh.tunnel_dst, fresh.spi), 0,
                                             sad_action(Direction::Dec, fresh)},
                                  fresh.spi));
    phases[1].push_back(switch_op(sender.switch_id, ControlStep::EncModify, Op::Modify, TableId::SadEnc,
                                  TableEntry{sad_enc_key(receiver.network_resource), 0, sad_action(Direction::Enc, fresh)},
                                  fresh.spi));
    phases[2].push_back(switch_op(receiver.switch_id, ControlStep::DecDelete, Op::Delete, TableId::SadDec,
                                  TableEntry{sad_dec_key(old.tunnel_src, old.tunnel_dst, old.spi), {}, {}}, old.spi));
    return phases;
  }

  const auto& rw = std::get<RoadwarriorPeer>(p.left_peer).roadwarrior_id;
  Ipv4Prefix host{left_endpoint(p), 32};
  if (slot == SaSlot::I) {
    // host sends, switch receives
    phases[0].push_back(switch_op(right.switch_id, ControlStep::DecInsert, Op::Insert, TableId::SadDec,
                                  TableEntry{sad_dec_key(fresh.tunnel_src, fresh.tunnel_dst, fresh.spi), 0,
                                             sad_action(Direction::Dec, fresh)},
                                  fresh.spi));
    phases[1].push_back(agent_op(rw, ControlStep::EncModify, host_config(p, t.sa_j, fresh), fresh.spi));
    phases[2].push_back(switch_op(right.switch_id, ControlStep::DecDelete, Op::Delete, TableId::SadDec,
                                  TableEntry{sad_dec_key(old.tunnel_src, old.tunnel_dst, old.spi), {}, {}}, old.spi));
  } else {
    phases[0].push_back(agent_op(rw, ControlStep::DecInsert, host_config(p, fresh, t.sa_i), fresh.spi));
    phases[1].push_back(switch_op(right.switch_id, ControlStep::EncModify, Op::Modify, TableId::SadEnc,
                                  TableEntry{sad_enc_key(host), 0, sad_action(Direction::Enc, fresh)}, fresh.spi));
    phases[2].push_back(agent_op(rw, ControlStep::DecDelete, host_config(p, fresh, t.sa_i, {old.spi}), old.spi));
  }
  return phases;
}

std::vector<Controller::Phase> Controller::delete_phases(const TunnelProfile& p, const TunnelState& t) {
  using Op = SwitchRequest::Op;
  const SwitchPeer& right = p.right_peer;
  const TrafficSelector& sel = p.traffic_selector;
  auto del = [&](const std::string& sw, ControlStep step, TableId table, MatchKey key, std::uint32_t spi) {
    return switch_op(sw, step, Op::Delete, table, TableEntry{std::move(key), 0, {}}, spi);
  };
  auto route_deletes = [&](const SwitchPeer& peer, Phase& phase) {
    for (const auto& r : peer.routes) {
      phase.push_back(del(peer.switch_id, ControlStep::RouteDelete, TableId::LpmFwd, lpm_fwd_key(r.prefix), 0));
    }
  };

  std::vector<Phase> phases(3);
  if (const auto* left = std::get_if<SwitchPeer>(&p.left_peer)) {
    phases[0].push_back(del(left->switch_id, ControlStep::SpdDelete, TableId::Spd, spd_key(sel.src, sel.dst, sel.protocol), 0));
    phases[0].push_back(del(right.switch_id, ControlStep::SpdDelete, TableId::Spd, spd_key(sel.dst, sel.src, sel.protocol), 0));
    route_deletes(*left, phases[0]);
    route_deletes(right, phases[0]);
    phases[1].push_back(del(left->switch_id, ControlStep::EncDelete, TableId::SadEnc,
                            sad_enc_key(right.network_resource), t.sa_i.spi));
    phases[1].push_back(del(right.switch_id, ControlStep::EncDelete, TableId::SadEnc,
                            sad_enc_key(left->network_resource), t.sa_j.spi));
    phases[2].push_back(del(left->switch_id, ControlStep::DecDelete, TableId::SadDec,
                            sad_dec_key(t.sa_j.tunnel_src, t.sa_j.tunnel_dst, t.sa_j.spi), t.sa_j.spi));
    phases[2].push_back(del(right.switch_id, ControlStep::DecDelete, TableId::SadDec,
                            sad_dec_key(t.sa_i.tunnel_src, t.sa_i.tunnel_dst, t.sa_i.spi), t.sa_i.spi));
    return phases;
  }

  const auto& rw = std::get<RoadwarriorPeer>(p.left_peer).roadwarrior_id;
  Ipv4Prefix host{left_endpoint(p), 32};
  phases[0].push_back(del(right.switch_id, ControlStep::SpdDelete, TableId::Spd, spd_key(sel.dst, host, sel.protocol), 0));
  route_deletes(right, phases[0]);
  phases[1].push_back(del(right.switch_id, ControlStep::EncDelete, TableId::SadEnc, sad_enc_key(host), t.sa_j.spi));
  phases[2].push_back(del(right.switch_id, ControlStep::DecDelete, TableId::SadDec,
                          sad_dec_key(t.sa_i.tunnel_src, t.sa_i.tunnel_dst, t.sa_i.spi), t.sa_i.spi));
  phases[2].push_back(agent_op(rw, ControlStep::Teardown, Teardown{0, p.profile_id}, 0));
  return phases;
}

void Controller::setup_tunnel(const std::string& profile_id) {
  profile(profile_id);  // throws UnknownProfile
  auto it = tunnels_.find(profile_id);
  if (it != tunnels_.end() && it->second.status != TunnelStatus::Down) return;
  TunnelState& t = tunnels_[profile_id];
  t = TunnelState{};
  t.profile_id = profile_id;
  t.status = TunnelStatus::SettingUp;
  enqueue(profile_id, QueuedWork{JobKind::Setup, SaSlot::I, std::chrono::steady_clock::now()});
}

void Controller::setup_site_to_site_tunnels() {
  for (const auto& [id, p] : profiles_) {
    if (p.mode == TunnelMode::SiteToSite) setup_tunnel(id);
  }
}

void Controller::delete_tunnel(const std::string& profile_id) {
  profile(profile_id);
  auto it = tunnels_.find(profile_id);
  if (it == tunnels_.end() || it->second.status == TunnelStatus::Down ||
      it->second.status == TunnelStatus::Deleting) {
    return;  // nothing installed, or already going away
  }
  enqueue(profile_id, QueuedWork{JobKind::Delete, SaSlot::I, std::chrono::steady_clock::now()});
}

bool Controller::renew_sa(std::uint32_t spi) {
  if (renewal_requested_.contains(spi)) {
    ++metrics_.duplicate_notifications;
    return false;
  }
  auto it = spi_index_.find(spi);
  if (it == spi_index_.end()) throw Error(ErrorCode::UnknownSpi, std::to_string(spi));
  renewal_requested_.insert(spi);
  enqueue(it->second.first, QueuedWork{JobKind::Renew, it->second.second, std::chrono::steady_clock::now()});
  return true;
}

void Controller::on_notification(const Notification& notification) {
  ++metrics_.notifications;
  try {
    renew_sa(notification.spi);
  } catch (const Error& e) {
    ++metrics_.unknown_spi_notifications;
    warn(nullptr, "notification from " + notification.switch_id + ": " + e.what());
  }
}

void Controller::enqueue(const std::string& profile_id, QueuedWork work) {
  queues_[profile_id].push_back(work);
  start_next(profile_id);
}

void Controller::start_next(const std::string& profile_id) {
  if (active_job_.contains(profile_id)) return;
  auto& queue = queues_[profile_id];
  while (!queue.empty()) {
    QueuedWork work = queue.front();
    queue.pop_front();
    const TunnelProfile& p = profiles_.at(profile_id);
    TunnelState& t = tunnels_.at(profile_id);
    auto job = std::make_unique<Job>();
    job->kind = work.kind;
    job->profile_id = profile_id;

    if (work.kind == JobKind::Setup) {
      try {
        std::tie(t.sa_i, t.sa_j) = generate_sa_pair(p);
      } catch (const Error& e) {
        t.status = TunnelStatus::Down;
        warn(&t, std::string("setup failed: ") + e.what());
        continue;
      }
      spi_index_[t.sa_i.spi] = {profile_id, SaSlot::I};
      spi_index_[t.sa_j.spi] = {profile_id, SaSlot::J};
      job->phases = setup_phases(p, t);
      auto requested = work.requested;
      job->on_done = [this, profile_id, requested](bool ok) {
        TunnelState& state = tunnels_.at(profile_id);
        if (ok) {
          state.status = TunnelStatus::Established;
          metrics_.setup_ms.push_back(elapsed_ms(requested));
          return;
        }
        auto switches = switch_peers(profiles_.at(profile_id));
        release_register(switches, state.sa_i.register_index);
        release_register(switches, state.sa_j.register_index);
        spi_index_.erase(state.sa_i.spi);
        spi_index_.erase(state.sa_j.spi);
        state.status = TunnelStatus::Down;
      };
    } else if (work.kind == JobKind::Renew) {
      if (t.status != TunnelStatus::Established) {
        warn(&t, "renewal skipped: tunnel is " + std::string(to_string(t.status)));
        continue;
      }
      SecurityAssociation fresh;
      try {
        auto switches = switch_peers(p);
        std::uint32_t reg = allocate_register(switches);
        const SecurityAssociation& old = work.slot == SaSlot::I ? t.sa_i : t.sa_j;
        fresh = make_sa(p, old.tunnel_src, old.tunnel_dst, reg);
      } catch (const Error& e) {
        warn(&t, std::string("renewal failed: ") + e.what());
        continue;
      }
      t.status = TunnelStatus::Renewing;
      t.renewing = work.slot;
      job->phases = renew_phases(p, t, work.slot, fresh);
      auto requested = work.requested;
      SaSlot slot = work.slot;
      job->on_done = [this, profile_id, requested, slot, fresh](bool ok) {
        TunnelState& state = tunnels_.at(profile_id);
        auto switches = switch_peers(profiles_.at(profile_id));
        SecurityAssociation& current = slot == SaSlot::I ? state.sa_i : state.sa_j;
        state.renewing.reset();
        if (state.status == TunnelStatus::Renewing) state.status = TunnelStatus::Established;
        if (!ok) {
          release_register(switches, fresh.register_index);
          renewal_requested_.erase(current.spi);
          return;
        }
        release_register(switches, current.register_index);
        spi_index_.erase(current.spi);
        current = fresh;
        spi_index_[fresh.spi] = {profile_id, slot};
        ++state.renewals;
        metrics_.renewal_ms.push_back(elapsed_ms(requested));
      };
    } else {
      if (t.status == TunnelStatus::Down) continue;
      t.status = TunnelStatus::Deleting;
      job->phases = delete_phases(p, t);
      job->on_done = [this, profile_id](bool) {
        TunnelState& state = tunnels_.at(profile_id);
        auto switches = switch_peers(profiles_.at(profile_id));
        release_register(switches, state.sa_i.register_index);
        release_register(switches, state.sa_j.register_index);
        spi_index_.erase(state.sa_i.spi);
        spi_index_.erase(state.sa_j.spi);
        state.status = TunnelStatus::Down;
      };
    }
    start_job(std::move(job));
    return;
  }
}

void Controller::start_job(std::unique_ptr<Job> job) {
  job->id = next_job_id_++;
  job->started = std::chrono::steady_clock::now();
  job->applied.assign(job->phases.size(), {});
  Job& ref = *job;
  active_job_[job->profile_id] = job->id;
  jobs_[job->id] = std::move(job);
  if (ref.phases.empty()) {
    finish_job(ref.id);
    return;
  }
  send_phase(ref);
}

void Controller::send_phase(Job& job) {
  Phase& phase = job.phases[job.phase];
  job.outstanding = phase.size();
  for (std::size_t i = 0; i < phase.size(); ++i) send_op(job, i);
}

void Controller::send_op(Job& job, std::size_t index) {
  PendingOp& op = job.phases[job.phase][index];
  ++op.attempts;
  std::uint64_t request_id = next_request_id_++;

  TraceRecord record;
  record.seq = trace_.size();
  record.time = now();
  record.job_id = job.id;
  record.job_kind = job.kind;
  record.profile_id = job.profile_id;
  record.target = op.target;
  record.to_agent = op.to_agent;
  record.step = op.step;
  record.op = op_name(op.payload);
  record.spi = op.spi;

  in_flight_[request_id] = InFlight{job.id, job.phase, index, trace_.size()};
  if (auto* request = std::get_if<SwitchRequest>(&op.payload)) {
    request->request_id = request_id;
    record.table = table_name(request->table);
    record.request = *request;
    trace_.push_back(std::move(record));
    transport_.send_switch(op.target, *request);
  } else {
    auto& message = std::get<AgentMessage>(op.payload);
    if (auto* config = std::get_if<ConfigApply>(&message)) config->request_id = request_id;
    if (auto* teardown = std::get_if<Teardown>(&message)) teardown->request_id = request_id;
    trace_.push_back(std::move(record));
    transport_.send_agent(op.target, message);
  }
}

void Controller::on_switch_response(const std::string& /*switch_id*/, const SwitchResponse& response) {
  on_response(response.request_id, response.ok, response.code, response.message);
}

void Controller::on_response(std::uint64_t request_id, bool ok, ErrorCode code, const std::string& message) {
  auto it = in_flight_.find(request_id);
  if (it == in_flight_.end()) return;
  InFlight flight = it->second;
  in_flight_.erase(it);
  trace_[flight.trace_index].ok = ok;
  auto job_it = jobs_.find(flight.job_id);
  if (job_it == jobs_.end()) return;
  Job& job = *job_it->second;
  PendingOp& op = job.phases[flight.phase][flight.index];
  TunnelState* t = &tunnels_.at(job.profile_id);

  if (!ok) {
    std::string what = std::string(to_string(op.step)) + " at " + op.target + ": " + message;
    switch (job.kind) {
      case JobKind::Delete:
        if (code == ErrorCode::NoSuchEntry) {
          ok = true;
        } else if (code == ErrorCode::PeerUnreachable && op.attempts < kMaxDeleteAttempts) {
          send_op(job, flight.index);
          return;
        } else {
          warn(t, "delete: " + what);
        }
        break;
      case JobKind::Renew:
        // Once the encryption side switched over, the old decryption entry
        // is only garbage; keep the renewal.
        if (flight.phase == 2) {
          warn(t, "renew: " + what);
        } else {
          job.failed = true;
          job.failure = what;
        }
        break;
      case JobKind::Setup:
        job.failed = true;
        job.failure = what;
        break;
      case JobKind::Rollback:
        warn(t, "rollback: " + what);
        break;
    }
  }
  if (ok) job.applied[flight.phase].push_back(op);

  if (--job.outstanding > 0) return;
  if (job.failed) {
    rollback(job);
    return;
  }
  if (++job.phase < job.phases.size()) {
    send_phase(job);
    return;
  }
  finish_job(job.id);
}

void Controller::rollback(Job& failed) {
  TunnelState* t = &tunnels_.at(failed.profile_id);
  warn(t, std::string(to_string(failed.kind)) + " failed, rolling back: " + failed.failure);
  auto undo = std::make_unique<Job>();
  undo->kind = JobKind::Rollback;
  undo->profile_id = failed.profile_id;
  for (auto phase = failed.applied.rbegin(); phase != failed.applied.rend(); ++phase) {
    if (phase->empty()) continue;
    Phase reversed;
    for (auto op = phase->rbegin(); op != phase->rend(); ++op) {
      if (failed.kind == JobKind::Renew && op->step == ControlStep::EncModify) continue;  // never applied twice
      if (failed.kind == JobKind::Renew && op->to_agent) {
        // Host-side DEC insert: drop the new inbound SA again.
        auto config = std::get<ConfigApply>(std::get<AgentMessage>(op->payload));
        const TunnelState& state = *t;
        SaSlot slot = state.renewing.value_or(SaSlot::J);
        const SecurityAssociation& old_in = slot == SaSlot::J ? state.sa_j : state.sa_i;
        std::uint32_t fresh_spi = config.sa_in.spi;
        config.sa_in = old_in;
        config.retire_in_spis = {fresh_spi};
        reversed.push_back(agent_op(op->target, ControlStep::DecDelete, config, fresh_spi));
        continue;
      }
      reversed.push_back(undo_of(*op));
    }
    undo->phases.push_back(std::move(reversed));
  }
  auto on_done = std::move(failed.on_done);
  undo->on_done = [on_done](bool) {
    if (on_done) on_done(false);
  };
  std::uint64_t failed_id = failed.id;
  jobs_.erase(failed_id);  // `failed` is dangling from here on
  active_job_.erase(undo->profile_id);
  start_job(std::move(undo));
}

void Controller::finish_job(std::uint64_t job_id) {
  auto it = jobs_.find(job_id);
  if (it == jobs_.end()) return;
  std::unique_ptr<Job> job = std::move(it->second);
  jobs_.erase(it);
  active_job_.erase(job->profile_id);
  if (job->on_done) job->on_done(true);
  start_next(job->profile_id);
}

void Controller::warn(TunnelState* t, const std::string& message) {
  warnings_.push_back(message);
  if (t != nullptr) t->warnings.push_back(message);
}

bool Controller::idle() const {
  if (!jobs_.empty()) return false;
  return std::all_of(queues_.begin(), queues_.end(), [](const auto& kv) { return kv.second.empty(); });
}

void Controller::on_agent_message(const std::string& channel_id, const AgentMessage& message) {
  auto reply_error = [&](std::uint64_t request_id, ErrorCode code, const std::string& what) {
    transport_.send_agent(channel_id, AgentError{request_id, code, what});
  };

  if (const auto* hello = std::get_if<Hello>(&message)) {
    auto it = roadwarriors_.find(channel_id);
    if (it == roadwarriors_.end() || hello->roadwarrior_id != channel_id) {
      reply_error(0, ErrorCode::UnknownRoadwarrior, hello->roadwarrior_id);
      return;
    }
    if (hello->token != it->second.token) {
      reply_error(0, ErrorCode::AuthenticationFailed, "identity token mismatch");
      return;
    }
    authenticated_.insert(channel_id);
    TunnelOffer offer;
    for (const auto& [id, p] : profiles_) {
      const auto* rw = std::get_if<RoadwarriorPeer>(&p.left_peer);
      if (rw != nullptr && rw->roadwarrior_id == channel_id) {
        offer.profiles.push_back({id, p.right_peer.network_resource, p.sa_params.suite});
      }
    }
    transport_.send_agent(channel_id, offer);
    return;
  }
  if (const auto* ack = std::get_if<Ack>(&message)) {
    on_response(ack->request_id, true, ErrorCode::ParseError, {});
    return;
  }
  if (const auto* error = std::get_if<AgentError>(&message)) {
    on_response(error->request_id, false, error->code, error->message);
    return;
  }
  if (!authenticated_.contains(channel_id)) {
    reply_error(0, ErrorCode::AuthenticationFailed, "session not authenticated");
    return;
  }
  if (const auto* request = std::get_if<TunnelRequest>(&message)) {
    auto it = profiles_.find(request->profile_id);
    const RoadwarriorPeer* rw = it == profiles_.end() ? nullptr : std::get_if<RoadwarriorPeer>(&it->second.left_peer);
    if (rw == nullptr || rw->roadwarrior_id != channel_id) {
      reply_error(0, ErrorCode::UnknownProfile, request->profile_id);
      return;
    }
    setup_tunnel(request->profile_id);
    return;
  }
  if (const auto* notice = std::get_if<ExpireNotice>(&message)) {
    ++metrics_.notifications;
    try {
      renew_sa(notice->spi);
    } catch (const Error& e) {
      ++metrics_.unknown_spi_notifications;
      warn(nullptr, "expire notice from " + channel_id + ": " + e.what());
    }
  }
}

void Controller::on_agent_disconnected(const std::string& channel_id) { authenticated_.erase(channel_id); }

nlohmann::json Controller::status_snapshot() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [id, t] : tunnels_) {
    const TunnelProfile& p = profiles_.at(id);
    nlohmann::json j{{"profile_id", id},
                     {"mode", to_string(p.mode)},
                     {"status", to_string(t.status)},
                     {"renewals", t.renewals},
                     {"sa_i", sa_summary(t.sa_i)},
                     {"sa_j", sa_summary(t.sa_j)},
                     {"warnings", t.warnings}};
    if (t.renewing) j["renewing"] = *t.renewing == SaSlot::I ? "sa_i" : "sa_j";
    out.push_back(std::move(j));
  }
  return out;
}

void replay_trace(const std::vector<TraceRecord>& trace, std::map<std::string, Switch*>& switches) {
  for (const auto& record : trace) {
    if (!record.request || record.ok != true) continue;
    auto it = switches.find(record.target);
    if (it == switches.end()) continue;
    apply_request(*it->second, *record.request);
  }
}

}  // namespace espnet
