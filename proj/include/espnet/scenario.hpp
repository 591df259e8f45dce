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

// Declarative scenario description for the simulator and its JSON loader.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "espnet/profile.hpp"
#include "espnet/switch.hpp"

namespace espnet {

enum class SpdAction { Bypass, Protect, Discard };
std::string_view to_string(SpdAction a);

struct SpdRule {
  Ipv4Prefix src;
  Ipv4Prefix dst;
  std::optional<std::uint8_t> protocol;
  std::int64_t priority = 0;
  SpdAction action = SpdAction::Bypass;
};

struct SwitchSpec {
  std::string id;
  Ipv4Addr endpoint_ip;
  std::vector<PortConfig> ports;
  std::size_t register_size = 1024;
  std::vector<RouteSpec> routes;
  std::vector<SpdRule> spd;
};

struct HostSpec {
  std::string id;
  Ipv4Addr ip;
  MacAddr mac;
  MacAddr gateway_mac;
  std::optional<std::string> roadwarrior_token;  // set for roadwarrior hosts
};

struct LinkEnd {
  std::string node;
  std::uint16_t port = 0;  // hosts have a single port 0
  auto operator<=>(const LinkEnd&) const = default;
};

struct LinkSpec {
  LinkEnd from;
  LinkEnd to;
};

enum class FlowMode { Bypass, Protect };
std::string_view to_string(FlowMode m);

struct FlowSpec {
  std::string id;
  std::string src_host;
  Ipv4Addr dst;
  std::uint64_t packets = 0;
  std::size_t payload_size = 64;
  FlowMode mode = FlowMode::Bypass;
  std::uint8_t protocol = 17;
};

inline constexpr std::size_t kMinPayload = 8;
inline constexpr std::size_t kMaxPayload = 1400;

struct Scenario {
  std::string name;
  std::uint64_t seed = 1;
  std::uint32_t runs = 1;
  std::vector<SwitchSpec> switches;
  std::vector<HostSpec> hosts;
  std::vector<LinkSpec> links;
  std::vector<TunnelProfile> profiles;
  std::map<std::string, std::vector<std::string>> agent_script;  // roadwarrior -> profile ids
  std::vector<FlowSpec> traffic;
  std::uint64_t link_delay = 1;
  std::uint64_t control_latency = 1;
  std::uint64_t packet_interval = 1;
  std::vector<std::string> offline;  // switches whose control channel is down

  const SwitchSpec* find_switch(const std::string& id) const;
  const HostSpec* find_host(const std::string& id) const;
};

/// Parses and validates. Errors are ValidationError (or ParseError for
/// malformed JSON) whose message starts with the path of the offending field.
Scenario parse_scenario(const nlohmann::json& j);
Scenario load_scenario(const std::string& path);
void validate(const Scenario& s);

}  // namespace espnet
