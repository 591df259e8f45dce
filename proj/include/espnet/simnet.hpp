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

// Deterministic discrete-event network: switches, hosts, unidirectional
// FIFO links, the controller and roadwarrior agents on one virtual clock.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "espnet/controller.hpp"
#include "espnet/host.hpp"
#include "espnet/scenario.hpp"
#include "espnet/switch.hpp"

namespace espnet {

/// Throughput class of a flow: "BYPASS", "NULL" or "AES".
std::string traffic_class(const Scenario& s, const FlowSpec& flow);

/// Deterministic payload: flow index, sequence number, then a pattern.
Bytes make_payload(std::uint32_t flow_index, std::uint32_t seq, std::size_t size);

struct FlowStats {
  std::string id;
  FlowMode mode = FlowMode::Bypass;
  std::string traffic_class;
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t delivered_bytes = 0;
  std::map<std::string, std::uint64_t> drops;
  std::uint64_t work_units = 0;
  std::uint64_t corrupted = 0;   // delivered but not byte-identical
  std::uint64_t duplicates = 0;  // same sequence number delivered twice
  std::uint64_t dropped() const;
  bool conserved() const { return sent == delivered + dropped(); }
};

struct LinkStats {
  LinkSpec spec;
  std::uint64_t enqueued = 0;
  std::uint64_t dequeued = 0;
};

struct ClassThroughput {
  std::uint64_t delivered_bytes = 0;
  std::uint64_t work_units = 0;
  double bytes_per_work_unit() const;
};

/// Wall-clock measurements; only collected when requested.
struct TimingSamples {
  std::vector<double> setup_ms;
  std::vector<double> renewal_ms;
  std::vector<double> sa_generation_ms;
  std::vector<double> table_insert_ms;
  std::vector<double> table_modify_ms;
  std::map<std::string, std::uint64_t> class_packets;
  std::map<std::string, double> class_seconds;
};

struct RunReport {
  std::uint64_t seed = 0;
  std::vector<FlowStats> flows;
  std::uint64_t rekey_count = 0;
  std::uint64_t rekey_attributable_drops = 0;
  std::map<std::string, std::map<std::string, std::uint64_t>> control_message_counts;  // job -> step -> n
  std::map<std::string, ClassThroughput> throughput;
  bool ordering_holds = true;
  bool payload_integrity = true;
  bool conserved = true;
  std::vector<LinkStats> links;
  nlohmann::json tunnels;
  std::vector<std::string> warnings;
  std::uint64_t end_time = 0;
  std::uint64_t events = 0;
  TimingSamples timings;
};

nlohmann::json to_json(const RunReport& r, bool include_timings = false);

struct TraceEvent {
  std::uint64_t time = 0;
  std::string node;
  std::string kind;
  nlohmann::json details;
};

nlohmann::json to_json(const TraceEvent& e);

struct SimOptions {
  bool record_trace = false;
  bool measure_timings = false;
};

class SimNet {
 public:
  /// Instantiates all nodes and wires links and control channels. The
  /// scenario must already be validated.
  SimNet(const Scenario& scenario, std::uint64_t seed, SimOptions options = {});
  ~SimNet();
  SimNet(const SimNet&) = delete;
  SimNet& operator=(const SimNet&) = delete;

  /// Runs setup, agent scripts and traffic to quiescence. Throws Deadlock
  /// (with a state dump in the message) when work remains unfinished.
  RunReport run();

  std::size_t node_count() const;
  std::size_t link_count() const { return links_.size(); }
  std::uint64_t time() const { return now_; }
  const std::vector<TraceEvent>& trace() const { return trace_; }
  Controller& controller() { return *controller_; }
  Switch& switch_node(const std::string& id) { return *switches_.at(id); }
  HostIpsecStack* host_stack(const std::string& id);
  const RoadwarriorAgent* agent(const std::string& id) const;

 private:
  struct FrameArrival {
    std::size_t link;
    Bytes frame;
    int flow;
  };
  struct ControlRequest {
    std::string switch_id;
    SwitchRequest request;
  };
  struct ControlResponse {
    std::string switch_id;
    SwitchResponse response;
  };
  struct NotificationArrival {
    Notification notification;
  };
  struct AgentDelivery {
    std::string roadwarrior;
    bool to_agent;
    Bytes frame;
  };
  struct Injection {
    std::size_t flow;
    std::uint64_t seq;
  };
  using Payload = std::variant<FrameArrival, ControlRequest, ControlResponse, NotificationArrival, AgentDelivery,
                               Injection>;

  class Transport;
  struct HostNode;

  void schedule(std::uint64_t delay, Payload payload);
  void run_until_quiescent();
  void dispatch(Payload& payload);
  void handle(FrameArrival& e);
  void handle(ControlRequest& e);
  void handle(ControlResponse& e);
  void handle(NotificationArrival& e);
  void handle(AgentDelivery& e);
  void handle(Injection& e);
  void transmit(const std::string& node, std::uint16_t port, Bytes frame, int flow);
  void deliver_to_host(HostNode& host, const Bytes& frame, int flow);
  void host_drop(HostNode& host, int flow, const std::string& category, const std::string& detail);
  void flush_agent(HostNode& host);
  void record(const std::string& node, const std::string& kind, nlohmann::json details);
  void check_quiescent_state(const char* stage);
  nlohmann::json state_dump() const;
  RunReport build_report();

  Scenario scenario_;
  std::uint64_t seed_;
  SimOptions options_;
  std::uint64_t now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t event_count_ = 0;
  std::map<std::pair<std::uint64_t, std::uint64_t>, Payload> queue_;

  std::unique_ptr<Transport> transport_;
  std::unique_ptr<Controller> controller_;
  std::map<std::string, std::unique_ptr<Switch>> switches_;
  std::map<std::string, std::unique_ptr<HostNode>> hosts_;
  std::vector<LinkStats> links_;
  std::map<LinkEnd, std::size_t> link_from_;
  std::map<std::size_t, LinkEnd> link_to_;
  std::vector<FlowStats> flows_;
  std::vector<std::set<std::uint64_t>> seen_;
  std::vector<TraceEvent> trace_;
  TimingSamples timings_;
};

std::unique_ptr<SimNet> build_simnet(const Scenario& scenario, std::optional<std::uint64_t> seed = std::nullopt,
                                     SimOptions options = {});
RunReport run_scenario(SimNet& net);

/// Runs `runs` independent simulations with seeds seed, seed+1, ... using up
/// to `jobs` threads. Reports come back in seed order.
std::vector<RunReport> run_many(const Scenario& scenario, std::uint64_t seed, std::uint32_t runs, unsigned jobs,
                                SimOptions options = {});

/// Combined report for several runs, plus pooled timing summaries when
/// include_timings is set.
nlohmann::json combined_report(const Scenario& scenario, std::uint64_t seed, const std::vector<RunReport>& runs,
                               bool include_timings);

}  // namespace espnet
