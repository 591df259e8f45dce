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

// IKE-less SDN controller.
//
// Tunnel lifecycle operations are executed as jobs made of ordered phases.
// All messages of a phase are sent together; the next phase starts only
// after every message of the current phase was acknowledged. This yields
// the DEC < ENC < SPD ordering for setup and DEC-insert < ENC-modify <
// DEC-delete for renewal on any transport that delivers per-peer in order.

#pragma once

#include <chrono>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "espnet/agent_protocol.hpp"
#include "espnet/profile.hpp"
#include "espnet/random.hpp"
#include "espnet/switch.hpp"

namespace espnet {

struct SwitchRequest {
  enum class Op { Insert, Modify, Delete, RegisterWrite };

  std::uint64_t request_id = 0;
  Op op = Op::Insert;
  TableId table = TableId::LpmFwd;
  TableEntry entry;  // Insert: full entry; Modify: key + action; Delete: key
  std::size_t register_index = 0;
  std::uint64_t register_value = 0;
};

struct SwitchResponse {
  std::uint64_t request_id = 0;
  bool ok = true;
  ErrorCode code = ErrorCode::ParseError;
  std::string message;
};

std::string_view to_string(SwitchRequest::Op op);

/// Executes a control request against a switch, turning errors into a
/// negative response.
SwitchResponse apply_request(Switch& sw, const SwitchRequest& request);

enum class ControlStep {
  DecInsert,
  EncInsert,
  SpdInsert,
  RouteInsert,
  EncModify,
  DecDelete,
  EncDelete,
  SpdDelete,
  RouteDelete,
  ConfigApply,
  Teardown,
};

std::string_view to_string(ControlStep step);

enum class JobKind { Setup, Renew, Delete, Rollback };
std::string_view to_string(JobKind kind);

struct TraceRecord {
  std::uint64_t seq = 0;
  std::uint64_t time = 0;
  std::uint64_t job_id = 0;
  JobKind job_kind = JobKind::Setup;
  std::string profile_id;
  std::string target;
  bool to_agent = false;
  ControlStep step = ControlStep::DecInsert;
  std::string op;     // insert | modify | delete | config_apply | teardown
  std::string table;  // empty for agent messages
  std::uint32_t spi = 0;
  std::optional<bool> ok;  // filled when the response arrives
  std::optional<SwitchRequest> request;
};

nlohmann::json to_json(const TraceRecord& r);

class SpiAllocator {
 public:
  SpiAllocator(std::uint32_t lo = kMinSpi, std::uint32_t hi = 0xffffffffu, std::size_t max_attempts = 4096);

  /// Uniform random value in [lo, hi] not issued before. Throws SpiExhaustion.
  std::uint32_t allocate(RandomSource& rng);
  bool issued(std::uint32_t spi) const { return allocated_.contains(spi); }
  std::size_t size() const { return allocated_.size(); }

 private:
  std::uint32_t lo_;
  std::uint32_t hi_;
  std::size_t max_attempts_;
  std::set<std::uint32_t> allocated_;
};

enum class TunnelStatus { SettingUp, Established, Renewing, Deleting, Down };
std::string_view to_string(TunnelStatus s);

enum class SaSlot { I, J };  // I: left -> right, J: right -> left

struct TunnelState {
  std::string profile_id;
  SecurityAssociation sa_i;
  SecurityAssociation sa_j;
  TunnelStatus status = TunnelStatus::Down;
  std::optional<SaSlot> renewing;
  std::uint64_t renewals = 0;
  std::vector<std::string> warnings;
};

struct RoadwarriorInfo {
  std::string id;
  std::string token;
  Ipv4Addr ip;
};

class ControllerTransport {
 public:
  virtual ~ControllerTransport() = default;
  virtual void send_switch(const std::string& switch_id, const SwitchRequest& request) = 0;
  virtual void send_agent(const std::string& roadwarrior_id, const AgentMessage& message) = 0;
};

struct ControllerMetrics {
  std::vector<double> setup_ms;
  std::vector<double> renewal_ms;
  std::vector<double> sa_generation_ms;
  std::uint64_t key_generations = 0;
  std::uint64_t notifications = 0;
  std::uint64_t duplicate_notifications = 0;
  std::uint64_t unknown_spi_notifications = 0;
};

class Controller {
 public:
  using Clock = std::function<std::uint64_t()>;

  Controller(ControllerTransport& transport, std::uint64_t seed, Clock clock = {});
  Controller(ControllerTransport& transport, std::unique_ptr<RandomSource> rng, Clock clock = {});

  void add_switch(const std::string& switch_id, std::size_t register_size = 1024);
  void add_roadwarrior(RoadwarriorInfo info);
  void add_profile(const TunnelProfile& profile);

  const TunnelProfile& profile(const std::string& profile_id) const;
  const TunnelState* tunnel(const std::string& profile_id) const;

  /// Fresh SA pair with unique SPIs, key material and register indices free
  /// on every switch peer. Throws SpiExhaustion.
  std::pair<SecurityAssociation, SecurityAssociation> generate_sa_pair(const TunnelProfile& profile);

  /// Starts the setup job. Completion is reported through tunnel()->status.
  void setup_tunnel(const std::string& profile_id);
  /// Proactive mode: sets up every site-to-site profile.
  void setup_site_to_site_tunnels();
  void delete_tunnel(const std::string& profile_id);
  /// Starts renewal of the SA identified by spi. Throws UnknownSpi; a
  /// repeated request for the same SPI is ignored (returns false).
  bool renew_sa(std::uint32_t spi);

  // Inbound events.
  void on_switch_response(const std::string& switch_id, const SwitchResponse& response);
  void on_notification(const Notification& notification);
  void on_agent_message(const std::string& channel_id, const AgentMessage& message);
  void on_agent_disconnected(const std::string& channel_id);

  /// No job running or queued.
  bool idle() const;

  const std::vector<TraceRecord>& trace() const { return trace_; }
  const ControllerMetrics& metrics() const { return metrics_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  /// All tunnel states, key material omitted.
  nlohmann::json status_snapshot() const;

 private:
  struct PendingOp {
    std::string target;
    bool to_agent = false;
    ControlStep step = ControlStep::DecInsert;
    std::variant<SwitchRequest, AgentMessage> payload;
    std::uint32_t spi = 0;
    int attempts = 0;
  };
  using Phase = std::vector<PendingOp>;

  struct Job {
    std::uint64_t id = 0;
    JobKind kind = JobKind::Setup;
    std::string profile_id;
    std::vector<Phase> phases;
    std::size_t phase = 0;
    std::size_t outstanding = 0;
    bool failed = false;
    std::string failure;
    std::vector<std::vector<PendingOp>> applied;  // per phase, for rollback
    std::function<void(bool ok)> on_done;
    std::chrono::steady_clock::time_point started;
  };

  struct InFlight {
    std::uint64_t job_id = 0;
    std::size_t phase = 0;
    std::size_t index = 0;
    std::size_t trace_index = 0;
  };

  struct QueuedWork {
    JobKind kind;
    SaSlot slot = SaSlot::I;
    std::chrono::steady_clock::time_point requested;
  };

  std::uint64_t now() const { return clock_ ? clock_() : 0; }
  SecurityAssociation make_sa(const TunnelProfile& p, Ipv4Addr src, Ipv4Addr dst, std::uint32_t register_index);
  std::uint32_t allocate_register(const std::vector<std::string>& switches);
  void release_register(const std::vector<std::string>& switches, std::uint32_t index);
  std::vector<std::string> switch_peers(const TunnelProfile& p) const;
  Ipv4Addr left_endpoint(const TunnelProfile& p) const;

  PendingOp switch_op(const std::string& target, ControlStep step, SwitchRequest::Op op, TableId table,
                      TableEntry entry, std::uint32_t spi);
  PendingOp agent_op(const std::string& target, ControlStep step, AgentMessage message, std::uint32_t spi);
  PendingOp undo_of(const PendingOp& op);

  std::vector<Phase> setup_phases(const TunnelProfile& p, const TunnelState& t);
  std::vector<Phase> renew_phases(const TunnelProfile& p, const TunnelState& t, SaSlot slot,
                                  const SecurityAssociation& fresh);
  std::vector<Phase> delete_phases(const TunnelProfile& p, const TunnelState& t);
  ConfigApply host_config(const TunnelProfile& p, const SecurityAssociation& sa_in,
                          const SecurityAssociation& sa_out, std::vector<std::uint32_t> retire = {});

  void enqueue(const std::string& profile_id, QueuedWork work);
  void start_next(const std::string& profile_id);
  void start_job(std::unique_ptr<Job> job);
  void send_phase(Job& job);
  void send_op(Job& job, std::size_t index);
  void on_response(std::uint64_t request_id, bool ok, ErrorCode code, const std::string& message);
  void finish_job(std::uint64_t job_id);
  void rollback(Job& failed);
  void warn(TunnelState* t, const std::string& message);

  ControllerTransport& transport_;
  std::unique_ptr<RandomSource> rng_;
  Clock clock_;
  SpiAllocator spis_;

  std::map<std::string, std::set<std::uint32_t>> registers_used_;
  std::map<std::string, std::size_t> register_size_;
  std::map<std::string, std::int64_t> next_spd_priority_;
  std::map<std::string, RoadwarriorInfo> roadwarriors_;
  std::set<std::string> authenticated_;
  std::map<std::string, TunnelProfile> profiles_;
  std::map<std::string, TunnelState> tunnels_;
  std::map<std::uint32_t, std::pair<std::string, SaSlot>> spi_index_;
  std::set<std::uint32_t> renewal_requested_;

  std::map<std::string, std::deque<QueuedWork>> queues_;
  std::map<std::string, std::uint64_t> active_job_;  // profile -> job id
  std::map<std::uint64_t, std::unique_ptr<Job>> jobs_;
  std::map<std::uint64_t, InFlight> in_flight_;
  std::uint64_t next_job_id_ = 1;
  std::uint64_t next_request_id_ = 1;

  std::vector<TraceRecord> trace_;
  ControllerMetrics metrics_;
  std::vector<std::string> warnings_;
};

/// Applies every acknowledged switch request of a trace, in order, to the
/// given switches (keyed by id).
void replay_trace(const std::vector<TraceRecord>& trace, std::map<std::string, Switch*>& switches);

}  // namespace espnet
