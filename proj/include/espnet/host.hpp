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

// Roadwarrior side: a host-internal ESP stack and the agent that applies
// controller configuration to it.

#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "espnet/agent_protocol.hpp"
#include "espnet/crypto.hpp"

namespace espnet {

struct HostLink {
  MacAddr mac;
  MacAddr gateway_mac;
};

struct HostSaState {
  SecurityAssociation sa;
  std::string profile_id;
  std::uint64_t counter = 0;
  bool soft_notified = false;
  bool hard_notified = false;
};

struct OutboundBinding {
  TrafficSelector selector;
  std::vector<Ipv4Prefix> routes;
  HostSaState sa_out;
};

class HostIpsecStack {
 public:
  explicit HostIpsecStack(HostLink link) : link_(link) {}

  /// Installs both SAs, the selector and routes for the profile. Reapplying
  /// the same profile replaces the outbound SA; inbound SAs accumulate until
  /// retired. Throws ConflictingSelector when another profile owns the same
  /// selector.
  void apply(const ConfigApply& config);
  /// Removes everything installed for the profile. Unknown profiles are a no-op.
  void teardown(const std::string& profile_id);

  /// Encapsulates an inner IPv4 datagram and returns the outer Ethernet frame.
  /// Throws NoSelectorMatch, HardLimitReached or SequenceOverflow.
  Bytes send(ByteView inner_ip);

  /// Accepts an Ethernet frame addressed to this host and returns the inner
  /// datagram (non-ESP frames are returned as their IPv4 datagram). Throws
  /// UnknownSpi, IcvMismatch, HardLimitReached, BadPadding, BadNextHeader.
  Bytes receive(ByteView frame);

  std::vector<ExpireNotice> poll_expire_notices();

  const std::map<std::uint32_t, HostSaState>& sad_in() const { return sad_in_; }
  const std::map<std::string, OutboundBinding>& outbound() const { return outbound_; }
  std::optional<ConfigApply> cached_config(const std::string& profile_id) const;

 private:
  void count(HostSaState& state);

  HostLink link_;
  std::map<std::uint32_t, HostSaState> sad_in_;
  std::map<std::string, OutboundBinding> outbound_;
  std::map<std::string, ConfigApply> config_cache_;
  std::deque<ExpireNotice> expire_;
};

/// Agent event log entry (received/sent messages and surfaced errors).
struct AgentEvent {
  std::string kind;  // "recv", "send", "error"
  std::string detail;
};

class RoadwarriorAgent {
 public:
  using SendFn = std::function<void(const AgentMessage&)>;

  RoadwarriorAgent(std::string id, std::string token, std::vector<std::string> requests, HostIpsecStack& stack,
                   SendFn send);

  const std::string& id() const { return id_; }

  /// Opens the session with a Hello.
  void start();
  void on_message(const AgentMessage& m);
  /// Forwards queued expire notices from the host stack to the controller.
  void forward_expire_notices();
  void on_channel_closed();

  const std::vector<ProfileSummary>& offered() const { return offered_; }
  const std::vector<AgentError>& errors() const { return errors_; }
  const std::vector<AgentEvent>& events() const { return events_; }
  bool closed() const { return closed_; }

 private:
  void send(const AgentMessage& m);

  std::string id_;
  std::string token_;
  std::vector<std::string> requests_;
  HostIpsecStack& stack_;
  SendFn send_;
  std::vector<ProfileSummary> offered_;
  std::vector<AgentError> errors_;
  std::vector<AgentEvent> events_;
  bool closed_ = false;
};

}  // namespace espnet
