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

// Tunnel profiles as loaded from the controller's profile file.

#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "espnet/crypto.hpp"

namespace espnet {

enum class TunnelMode { HostToSite, SiteToSite };

std::string_view to_string(TunnelMode mode);

struct TrafficSelector {
  Ipv4Prefix src;
  Ipv4Prefix dst;
  std::optional<std::uint8_t> protocol;  // nullopt = any
  bool operator==(const TrafficSelector&) const = default;
};

struct RouteSpec {
  Ipv4Prefix prefix;
  MacAddr next_hop_mac;
  std::uint16_t port = 0;
  bool operator==(const RouteSpec&) const = default;
};

struct SwitchPeer {
  std::string switch_id;
  Ipv4Addr endpoint_ip;
  Ipv4Prefix network_resource;
  std::vector<RouteSpec> routes;  // installed with the SPD entries, removed on delete
  bool operator==(const SwitchPeer&) const = default;
};

struct RoadwarriorPeer {
  std::string roadwarrior_id;
  bool operator==(const RoadwarriorPeer&) const = default;
};

struct SaParams {
  CipherSuite suite = CipherSuite::AesCtrHmacMd5;
  std::uint64_t soft_limit = 0;
  std::uint64_t hard_limit = 0;
  bool operator==(const SaParams&) const = default;
};

struct TunnelProfile {
  std::string profile_id;
  TunnelMode mode = TunnelMode::SiteToSite;
  TrafficSelector traffic_selector;
  std::variant<SwitchPeer, RoadwarriorPeer> left_peer;
  SwitchPeer right_peer;
  SaParams sa_params;
  bool operator==(const TunnelProfile&) const = default;
};

/// Throws ValidationError: soft >= hard, mode/left peer mismatch, empty ids.
void validate(const TunnelProfile& profile);

void to_json(nlohmann::json& j, const TrafficSelector& s);
void from_json(const nlohmann::json& j, TrafficSelector& s);
void to_json(nlohmann::json& j, const RouteSpec& r);
void from_json(const nlohmann::json& j, RouteSpec& r);
void to_json(nlohmann::json& j, const SwitchPeer& p);
void from_json(const nlohmann::json& j, SwitchPeer& p);
void to_json(nlohmann::json& j, const TunnelProfile& p);
void from_json(const nlohmann::json& j, TunnelProfile& p);

/// Profile file: a JSON array of TunnelProfile objects.
std::vector<TunnelProfile> load_profiles(const std::string& path);

/// SA as carried to agents (key material hex-encoded).
void to_json(nlohmann::json& j, const SecurityAssociation& sa);
void from_json(const nlohmann::json& j, SecurityAssociation& sa);

}  // namespace espnet
