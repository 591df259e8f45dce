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

#include "espnet/simnet.hpp"

#include <algorithm>
#include <chrono>
#include <future>

#include <spdlog/spdlog.h>

#include "espnet/stats.hpp"

namespace espnet {

namespace {

using nlohmann::json;
using SteadyClock = std::chrono::steady_clock;

double ms_since(SteadyClock::time_point t) {
  return std::chrono::duration<double, std::milli>(SteadyClock::now() - t).count();
}

std::string drop_category(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownSpi: return std::string(to_string(DropReason::NoSa));
    case ErrorCode::IcvMismatch: return std::string(to_string(DropReason::IcvFail));
    case ErrorCode::HardLimitReached: return std::string(to_string(DropReason::HardLimit));
    case ErrorCode::NoSelectorMatch: return std::string(to_string(DropReason::NoSpdMatch));
    case ErrorCode::TruncatedPacket:
    case ErrorCode::BadChecksum:
    case ErrorCode::UnsupportedEthertype:
    case ErrorCode::UnsupportedIhl:
    case ErrorCode::MalformedHeader: return std::string(to_string(DropReason::ParseError));
    default: return std::string(to_string(DropReason::BadEsp));
  }
}

bool rekey_attributable(const std::string& category) {
  return category == to_string(DropReason::NoSa) || category == to_string(DropReason::IcvFail) ||
         category == to_string(DropReason::BadEsp) || category == to_string(DropReason::HardLimit);
}

bool transient(TunnelStatus s) {
  return s == TunnelStatus::SettingUp || s == TunnelStatus::Renewing || s == TunnelStatus::Deleting;
}

}  // namespace

std::string traffic_class(const Scenario& s, const FlowSpec& flow) {
  if (flow.mode == FlowMode::Bypass) return "BYPASS";
  const HostSpec* src = s.find_host(flow.src_host);
  for (const auto& p : s.profiles) {
    const auto& sel = p.traffic_selector;
    if (sel.protocol && *sel.protocol != flow.protocol) continue;
    bool covered = false;
    if (std::holds_alternative<RoadwarriorPeer>(p.left_peer)) {
      const HostSpec* rw = s.find_host(std::get<RoadwarriorPeer>(p.left_peer).roadwarrior_id);
      covered = rw != nullptr && src != nullptr &&
                ((rw->id == src->id && sel.dst.contains(flow.dst)) || (rw->ip == flow.dst && sel.dst.contains(src->ip)));
    } else if (src != nullptr) {
      covered = (sel.src.contains(src->ip) && sel.dst.contains(flow.dst)) ||
                (sel.dst.contains(src->ip) && sel.src.contains(flow.dst));
    }
    if (covered) return p.sa_params.suite == CipherSuite::Null ? "NULL" : "AES";
  }
  return "PROTECT";
}

Bytes make_payload(std::uint32_t flow_index, std::uint32_t seq, std::size_t size) {
  Bytes out(std::max<std::size_t>(size, kMinPayload));
  store_be32(out.data(), flow_index);
  store_be32(out.data() + 4, seq);
  for (std::size_t i = 8; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(flow_index * 31 + seq * 7 + i);
  }
  return out;
}

std::uint64_t FlowStats::dropped() const {
  std::uint64_t total = 0;
  for (const auto& [_, n] : drops) total += n;
  return total;
}

double ClassThroughput::bytes_per_work_unit() const {
  return work_units == 0 ? 0.0 : static_cast<double>(delivered_bytes) / static_cast<double>(work_units);
}

json to_json(const TraceEvent& e) {
  return {{"time", e.time}, {"node", e.node}, {"kind", e.kind}, {"details", e.details}};
}

json to_json(const RunReport& r, bool include_timings) {
  json flows = json::array();
  for (const auto& f : r.flows) {
    flows.push_back({{"id", f.id},
                     {"mode", to_string(f.mode)},
                     {"class", f.traffic_class},
                     {"sent", f.sent},
                     {"delivered", f.delivered},
                     {"dropped", f.drops},
                     {"delivered_bytes", f.delivered_bytes},
                     {"work_units", f.work_units},
                     {"corrupted", f.corrupted},
                     {"duplicates", f.duplicates},
                     {"conserved", f.conserved()}});
  }
  json throughput = json::object();
  for (const auto& [cls, t] : r.throughput) {
    throughput[cls] = {{"delivered_bytes", t.delivered_bytes},
                       {"work_units", t.work_units},
                       {"bytes_per_work_unit", t.bytes_per_work_unit()}};
  }
  json links = json::array();
  for (const auto& l : r.links) {
    links.push_back({{"from", l.spec.from.node + ":" + std::to_string(l.spec.from.port)},
                     {"to", l.spec.to.node + ":" + std::to_string(l.spec.to.port)},
                     {"enqueued", l.enqueued},
                     {"dequeued", l.dequeued}});
  }
  json j{{"seed", r.seed},
         {"flows", flows},
         {"rekey_count", r.rekey_count},
         {"rekey_attributable_drops", r.rekey_attributable_drops},
         {"control_message_counts", r.control_message_counts},
         {"throughput", {{"classes", throughput}, {"ordering", "BYPASS >= NULL >= AES"}, {"ordering_holds", r.ordering_holds}}},
         {"payload_integrity", r.payload_integrity},
         {"conserved", r.conserved},
         {"links", links},
         {"tunnels", r.tunnels},
         {"warnings", r.warnings},
         {"end_time", r.end_time},
         {"events", r.events}};
  if (include_timings) {
    json rates = json::object();
    for (const auto& [cls, n] : r.timings.class_packets) {
      double sec = r.timings.class_seconds.at(cls);
      rates[cls] = sec > 0 ? static_cast<double>(n) / sec : 0.0;
    }
    j["timings"] = {{"setup_ms", to_json(summarize(r.timings.setup_ms))},
                    {"renewal_ms", to_json(summarize(r.timings.renewal_ms))},
                    {"sa_generation_ms", to_json(summarize(r.timings.sa_generation_ms))},
                    {"table_insert_ms", to_json(summarize(r.timings.table_insert_ms))},
                    {"table_modify_ms", to_json(summarize(r.timings.table_modify_ms))},
                    {"switch_packets_per_second", rates}};
  }
  return j;
}

class SimNet::Transport : public ControllerTransport {
 public:
  explicit Transport(SimNet& net) : net_(net) {}
  void send_switch(const std::string& switch_id, const SwitchRequest& request) override {
    net_.record("controller", "ctl_request",
                {{"switch", switch_id}, {"request_id", request.request_id}, {"op", to_string(request.op)},
                 {"table", table_name(request.table)}});
    net_.schedule(net_.scenario_.control_latency, ControlRequest{switch_id, request});
  }
  void send_agent(const std::string& roadwarrior_id, const AgentMessage& message) override {
    net_.record("controller", "agent_send", {{"to", roadwarrior_id}, {"type", message_type(message)}});
    net_.schedule(net_.scenario_.control_latency, AgentDelivery{roadwarrior_id, true, encode_frame(message)});
  }

 private:
  SimNet& net_;
};

struct SimNet::HostNode {
  HostSpec spec;
  std::unique_ptr<HostIpsecStack> stack;
  std::unique_ptr<RoadwarriorAgent> agent;
  FrameDecoder inbox;   // controller -> agent
  FrameDecoder outbox;  // agent -> controller
};

SimNet::SimNet(const Scenario& scenario, std::uint64_t seed, SimOptions options)
    : scenario_(scenario), seed_(seed), options_(options) {
  transport_ = std::make_unique<Transport>(*this);
  controller_ = std::make_unique<Controller>(*transport_, seed, [this] { return now_; });

  for (const auto& spec : scenario_.switches) {
    auto sw = std::make_unique<Switch>(SwitchConfig{spec.id, spec.ports, spec.register_size});
    for (const auto& r : spec.routes) {
      sw->table_insert(TableId::LpmFwd, TableEntry{lpm_fwd_key(r.prefix), 0, forward_action(r.next_hop_mac, r.port)});
    }
    for (const auto& rule : spec.spd) {
      ActionCall action = rule.action == SpdAction::Discard ? ActionCall{kActDrop, {}}
                          : rule.action == SpdAction::Protect ? spd_mark_action(SpdMark::Protect)
                                                              : spd_mark_action(SpdMark::Bypass);
      sw->table_insert(TableId::Spd, TableEntry{spd_key(rule.src, rule.dst, rule.protocol), rule.priority, action});
    }
    controller_->add_switch(spec.id, spec.register_size);
    switches_[spec.id] = std::move(sw);
  }

  for (const auto& spec : scenario_.hosts) {
    auto node = std::make_unique<HostNode>();
    node->spec = spec;
    if (spec.roadwarrior_token) {
      node->stack = std::make_unique<HostIpsecStack>(HostLink{spec.mac, spec.gateway_mac});
      std::vector<std::string> requests;
      if (auto it = scenario_.agent_script.find(spec.id); it != scenario_.agent_script.end()) requests = it->second;
      std::string id = spec.id;
      node->agent = std::make_unique<RoadwarriorAgent>(
          spec.id, *spec.roadwarrior_token, requests, *node->stack, [this, id](const AgentMessage& m) {
            record(id, "agent_send", {{"type", message_type(m)}});
            schedule(scenario_.control_latency, AgentDelivery{id, false, encode_frame(m)});
          });
      controller_->add_roadwarrior(RoadwarriorInfo{spec.id, *spec.roadwarrior_token, spec.ip});
    }
    hosts_[spec.id] = std::move(node);
  }

  for (const auto& p : scenario_.profiles) controller_->add_profile(p);

  for (const auto& spec : scenario_.links) {
    link_from_[spec.from] = links_.size();
    links_.push_back(LinkStats{spec, 0, 0});
  }

  for (std::size_t i = 0; i < scenario_.traffic.size(); ++i) {
    FlowStats f;
    f.id = scenario_.traffic[i].id;
    f.mode = scenario_.traffic[i].mode;
    f.traffic_class = traffic_class(scenario_, scenario_.traffic[i]);
    flows_.push_back(std::move(f));
  }
  seen_.resize(flows_.size());
}

SimNet::~SimNet() = default;

std::size_t SimNet::node_count() const { return switches_.size() + hosts_.size(); }

HostIpsecStack* SimNet::host_stack(const std::string& id) {
  auto it = hosts_.find(id);
  return it == hosts_.end() ? nullptr : it->second->stack.get();
}

const RoadwarriorAgent* SimNet::agent(const std::string& id) const {
  auto it = hosts_.find(id);
  return it == hosts_.end() ? nullptr : it->second->agent.get();
}

void SimNet::schedule(std::uint64_t delay, Payload payload) {
  queue_.emplace(std::make_pair(now_ + delay, next_seq_++), std::move(payload));
}

void SimNet::record(const std::string& node, const std::string& kind, json details) {
  spdlog::trace("t={} {} {} {}", now_, node, kind, details.dump());
  if (options_.record_trace) trace_.push_back(TraceEvent{now_, node, kind, std::move(details)});
}

void SimNet::run_until_quiescent() {
  while (!queue_.empty()) {
    auto node = queue_.extract(queue_.begin());
    now_ = node.key().first;
    ++event_count_;
    dispatch(node.mapped());
  }
}

void SimNet::dispatch(Payload& payload) {
  std::visit([this](auto& e) { handle(e); }, payload);
}

void SimNet::transmit(const std::string& node, std::uint16_t port, Bytes frame, int flow) {
  auto it = link_from_.find(LinkEnd{node, port});
  if (it == link_from_.end()) {
    if (flow >= 0) ++flows_[flow].drops["no_link"];
    record(node, "link_drop", {{"port", port}, {"flow", flow}});
    return;
  }
  ++links_[it->second].enqueued;
  schedule(scenario_.link_delay, FrameArrival{it->second, std::move(frame), flow});
}

void SimNet::handle(FrameArrival& e) {
  LinkStats& link = links_[e.link];
  ++link.dequeued;
  const LinkEnd& to = link.spec.to;
  if (auto sw_it = switches_.find(to.node); sw_it != switches_.end()) {
    Switch& sw = *sw_it->second;
    auto started = SteadyClock::now();
    ProcessResult result = sw.process_packet(to.port, e.frame);
    if (options_.measure_timings && e.flow >= 0) {
      const auto& cls = flows_[e.flow].traffic_class;
      timings_.class_packets[cls] += 1;
      timings_.class_seconds[cls] += std::chrono::duration<double>(SteadyClock::now() - started).count();
    }
    if (e.flow >= 0) flows_[e.flow].work_units += result.work;
    if (result.drop) {
      if (e.flow >= 0) ++flows_[e.flow].drops[std::string(to_string(*result.drop))];
      record(sw.id(), "switch_drop", {{"port", to.port}, {"reason", to_string(*result.drop)}, {"flow", e.flow}});
    } else if (result.output) {
      record(sw.id(), "switch_forward", {{"in", to.port}, {"out", result.output->port}, {"flow", e.flow}});
      transmit(sw.id(), result.output->port, std::move(result.output->frame), e.flow);
    }
    for (auto& n : sw.poll_notifications()) {
      record(sw.id(), "notification", {{"spi", n.spi}, {"direction", to_string(n.direction)}});
      schedule(scenario_.control_latency, NotificationArrival{std::move(n)});
    }
    return;
  }
  deliver_to_host(*hosts_.at(to.node), e.frame, e.flow);
}

void SimNet::host_drop(HostNode& host, int flow, const std::string& category, const std::string& detail) {
  if (flow >= 0) ++flows_[flow].drops[category];
  record(host.spec.id, "host_drop", {{"reason", category}, {"detail", detail}, {"flow", flow}});
}

void SimNet::deliver_to_host(HostNode& host, const Bytes& frame, int flow) {
  Packet inner;
  try {
    if (host.stack) {
      Bytes datagram = host.stack->receive(frame);
      flush_agent(host);
      inner = parse_ipv4(datagram);
    } else {
      inner = parse_packet(frame);
      if (inner.esp) {
        host_drop(host, flow, std::string(to_string(DropReason::NoSa)), "ESP at a host without IPsec stack");
        return;
      }
    }
  } catch (const Error& err) {
    flush_agent(host);
    host_drop(host, flow, drop_category(err.code()), err.what());
    return;
  }
  if (inner.ipv4.dst != host.spec.ip) {
    host_drop(host, flow, "misdelivered", inner.ipv4.dst.to_string());
    return;
  }
  if (flow < 0) return;
  FlowStats& stats = flows_[flow];
  const FlowSpec& spec = scenario_.traffic[flow];
  std::uint64_t seq = inner.body.size() >= 8 ? load_be32(inner.body.data() + 4) : UINT64_MAX;
  if (inner.body != make_payload(static_cast<std::uint32_t>(flow), static_cast<std::uint32_t>(seq), spec.payload_size)) {
    ++stats.corrupted;
  } else if (!seen_[flow].insert(seq).second) {
    ++stats.duplicates;
  }
  ++stats.delivered;
  stats.delivered_bytes += inner.body.size();
  record(host.spec.id, "host_deliver", {{"flow", flow}, {"seq", seq}});
}

void SimNet::flush_agent(HostNode& host) {
  if (host.agent) host.agent->forward_expire_notices();
}

void SimNet::handle(Injection& e) {
  const FlowSpec& spec = scenario_.traffic[e.flow];
  HostNode& host = *hosts_.at(spec.src_host);
  FlowStats& stats = flows_[e.flow];
  int flow = static_cast<int>(e.flow);
  ++stats.sent;
  if (e.seq + 1 < spec.packets) schedule(scenario_.packet_interval, Injection{e.flow, e.seq + 1});

  Ipv4Header ip;
  ip.protocol = spec.protocol;
  ip.src = host.spec.ip;
  ip.dst = spec.dst;
  ip.identification = static_cast<std::uint16_t>(e.seq);
  Bytes datagram = serialize_ipv4(ip, std::nullopt, make_payload(static_cast<std::uint32_t>(e.flow),
                                                                 static_cast<std::uint32_t>(e.seq), spec.payload_size));
  record(host.spec.id, "inject", {{"flow", flow}, {"seq", e.seq}});
  Bytes frame;
  if (host.stack && spec.mode == FlowMode::Protect) {
    try {
      frame = host.stack->send(datagram);
    } catch (const Error& err) {
      flush_agent(host);
      host_drop(host, flow, drop_category(err.code()), err.what());
      return;
    }
    flush_agent(host);
  } else {
    frame.resize(kEthernetHeaderLen);
    std::copy(host.spec.gateway_mac.octets.begin(), host.spec.gateway_mac.octets.end(), frame.begin());
    std::copy(host.spec.mac.octets.begin(), host.spec.mac.octets.end(), frame.begin() + 6);
    store_be16(frame.data() + 12, kEthertypeIpv4);
    frame.insert(frame.end(), datagram.begin(), datagram.end());
  }
  transmit(host.spec.id, 0, std::move(frame), flow);
}

void SimNet::handle(ControlRequest& e) {
  bool offline = std::find(scenario_.offline.begin(), scenario_.offline.end(), e.switch_id) != scenario_.offline.end();
  SwitchResponse response;
  if (offline) {
    response = SwitchResponse{e.request.request_id, false, ErrorCode::PeerUnreachable, e.switch_id + " unreachable"};
  } else {
    auto started = SteadyClock::now();
    response = apply_request(*switches_.at(e.switch_id), e.request);
    if (options_.measure_timings) {
      if (e.request.op == SwitchRequest::Op::Insert) timings_.table_insert_ms.push_back(ms_since(started));
      if (e.request.op == SwitchRequest::Op::Modify) timings_.table_modify_ms.push_back(ms_since(started));
    }
  }
  record(e.switch_id, "ctl_apply",
         {{"request_id", response.request_id}, {"ok", response.ok},
          {"code", response.ok ? std::string() : std::string(to_string(response.code))}});
  schedule(scenario_.control_latency, ControlResponse{e.switch_id, std::move(response)});
}

void SimNet::handle(ControlResponse& e) {
  record("controller", "ctl_response", {{"switch", e.switch_id}, {"request_id", e.response.request_id}, {"ok", e.response.ok}});
  controller_->on_switch_response(e.switch_id, e.response);
}

void SimNet::handle(NotificationArrival& e) {
  record("controller", "notification_in", {{"switch", e.notification.switch_id}, {"spi", e.notification.spi}});
  controller_->on_notification(e.notification);
}

void SimNet::handle(AgentDelivery& e) {
  HostNode& host = *hosts_.at(e.roadwarrior);
  FrameDecoder& decoder = e.to_agent ? host.inbox : host.outbox;
  decoder.feed(e.frame);
  while (auto message = decoder.next()) {
    if (e.to_agent) {
      record(e.roadwarrior, "agent_recv", {{"type", message_type(*message)}});
      host.agent->on_message(*message);
    } else {
      record("controller", "agent_recv", {{"from", e.roadwarrior}, {"type", message_type(*message)}});
      controller_->on_agent_message(e.roadwarrior, *message);
    }
  }
}

json SimNet::state_dump() const {
  json switches = json::object();
  for (const auto& [id, sw] : switches_) switches[id] = sw->snapshot();
  json pending = json::array();
  for (const auto& [key, payload] : queue_) pending.push_back({{"time", key.first}, {"seq", key.second}});
  return {{"time", now_}, {"tunnels", controller_->status_snapshot()}, {"switches", switches},
          {"controller_idle", controller_->idle()}, {"pending_events", pending}};
}

void SimNet::check_quiescent_state(const char* stage) {
  bool stuck = !controller_->idle();
  for (const auto& p : scenario_.profiles) {
    const TunnelState* t = controller_->tunnel(p.profile_id);
    if (t != nullptr && transient(t->status)) stuck = true;
  }
  for (const auto& f : flows_) {
    if (!f.conserved()) stuck = true;
  }
  if (stuck) {
    throw Error(ErrorCode::Deadlock,
                std::string("no events left but work is unfinished after ") + stage + "; state: " + state_dump().dump());
  }
}

RunReport SimNet::run() {
  spdlog::debug("run seed={} scenario='{}'", seed_, scenario_.name);
  controller_->setup_site_to_site_tunnels();
  for (auto& [id, host] : hosts_) {
    if (host->agent) host->agent->start();
  }
  run_until_quiescent();
  check_quiescent_state("setup");
  spdlog::debug("setup finished at t={}", now_);

  for (std::size_t i = 0; i < scenario_.traffic.size(); ++i) schedule(1, Injection{i, 0});
  run_until_quiescent();
  check_quiescent_state("traffic");
  spdlog::debug("traffic finished at t={} after {} events", now_, event_count_);
  return build_report();
}

RunReport SimNet::build_report() {
  RunReport r;
  r.seed = seed_;
  r.flows = flows_;
  r.links = links_;
  r.end_time = now_;
  r.events = event_count_;
  r.tunnels = controller_->status_snapshot();
  r.warnings = controller_->warnings();
  for (const auto& p : scenario_.profiles) {
    if (const TunnelState* t = controller_->tunnel(p.profile_id)) r.rekey_count += t->renewals;
  }
  for (const auto& rec : controller_->trace()) {
    ++r.control_message_counts[std::string(to_string(rec.job_kind))][std::string(to_string(rec.step))];
  }
  for (const auto& f : r.flows) {
    if (!f.conserved()) r.conserved = false;
    if (f.corrupted > 0 || f.duplicates > 0) r.payload_integrity = false;
    if (f.mode == FlowMode::Protect) {
      for (const auto& [cat, n] : f.drops) {
        if (rekey_attributable(cat)) r.rekey_attributable_drops += n;
      }
    }
    auto& t = r.throughput[f.traffic_class];
    t.delivered_bytes += f.delivered_bytes;
    t.work_units += f.work_units;
  }
  std::optional<double> previous;
  for (const char* cls : {"BYPASS", "NULL", "AES"}) {
    auto it = r.throughput.find(cls);
    if (it == r.throughput.end()) continue;
    double v = it->second.bytes_per_work_unit();
    if (previous && v > *previous) r.ordering_holds = false;
    previous = v;
  }
  for (const auto& l : r.links) {
    if (l.enqueued != l.dequeued) r.conserved = false;
  }
  r.timings = timings_;
  const auto& m = controller_->metrics();
  r.timings.setup_ms = m.setup_ms;
  r.timings.renewal_ms = m.renewal_ms;
  r.timings.sa_generation_ms = m.sa_generation_ms;
  return r;
}

std::unique_ptr<SimNet> build_simnet(const Scenario& scenario, std::optional<std::uint64_t> seed, SimOptions options) {
  validate(scenario);
  return std::make_unique<SimNet>(scenario, seed.value_or(scenario.seed), options);
}

RunReport run_scenario(SimNet& net) { return net.run(); }

std::vector<RunReport> run_many(const Scenario& scenario, std::uint64_t seed, std::uint32_t runs, unsigned jobs,
                                SimOptions options) {
  validate(scenario);
  std::vector<RunReport> reports(runs);
  auto one = [&](std::uint32_t i) {
    SimNet net(scenario, seed + i, options);
    return net.run();
  };
  jobs = std::max(1u, jobs);
  for (std::uint32_t base = 0; base < runs; base += jobs) {
    std::vector<std::future<RunReport>> batch;
    for (std::uint32_t i = base; i < std::min(runs, base + jobs); ++i) {
      batch.push_back(std::async(jobs == 1 ? std::launch::deferred : std::launch::async, one, i));
    }
    for (std::size_t k = 0; k < batch.size(); ++k) reports[base + k] = batch[k].get();
  }
  return reports;
}

json combined_report(const Scenario& scenario, std::uint64_t seed, const std::vector<RunReport>& runs,
                     bool include_timings) {
  json per_run = json::array();
  bool integrity = true;
  bool conserved = true;
  bool ordering = true;
  json rekeys = json::array();
  TimingSamples pooled;
  for (const auto& r : runs) {
    per_run.push_back(to_json(r, false));
    integrity = integrity && r.payload_integrity;
    conserved = conserved && r.conserved;
    ordering = ordering && r.ordering_holds;
    rekeys.push_back(r.rekey_count);
    auto append = [](std::vector<double>& dst, const std::vector<double>& src) { dst.insert(dst.end(), src.begin(), src.end()); };
    append(pooled.setup_ms, r.timings.setup_ms);
    append(pooled.renewal_ms, r.timings.renewal_ms);
    append(pooled.sa_generation_ms, r.timings.sa_generation_ms);
    append(pooled.table_insert_ms, r.timings.table_insert_ms);
    append(pooled.table_modify_ms, r.timings.table_modify_ms);
    for (const auto& [cls, n] : r.timings.class_packets) pooled.class_packets[cls] += n;
    for (const auto& [cls, s] : r.timings.class_seconds) pooled.class_seconds[cls] += s;
  }
  json j{{"scenario", scenario.name},
         {"seed", seed},
         {"runs", per_run},
         {"summary",
          {{"run_count", runs.size()},
           {"payload_integrity", integrity},
           {"conserved", conserved},
           {"ordering_holds", ordering},
           {"rekey_counts", rekeys}}}};
  if (include_timings) {
    RunReport pooled_report;
    pooled_report.timings = pooled;
    j["timings"] = to_json(pooled_report, true)["timings"];
  }
  return j;
}

}  // namespace espnet
