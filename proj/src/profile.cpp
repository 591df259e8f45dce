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

#include "espnet/profile.hpp"

#include <fstream>

namespace espnet {

namespace {

template <std::size_t N>
std::array<std::uint8_t, N> hex_array(const std::string& hex) {
  Bytes b = from_hex(hex);
  if (b.size() != N) throw Error(ErrorCode::ParseError, "key material has wrong length");
  std::array<std::uint8_t, N> out{};
  std::copy(b.begin(), b.end(), out.begin());
  return out;
}

}  // namespace

std::string_view to_string(TunnelMode mode) {
  return mode == TunnelMode::HostToSite ? "host_to_site" : "site_to_site";
}

void validate(const TunnelProfile& p) {
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::ValidationError, "profile '" + p.profile_id + "': " + what);
  };
  if (p.profile_id.empty()) fail("empty profile_id");
  if (p.sa_params.soft_limit >= p.sa_params.hard_limit) fail("sa_params.soft_limit must be < hard_limit");
  if (p.sa_params.soft_limit == 0) fail("sa_params.soft_limit must be positive");
  bool rw = std::holds_alternative<RoadwarriorPeer>(p.left_peer);
  if (rw != (p.mode == TunnelMode::HostToSite)) fail("left_peer kind does not match mode");
  if (p.right_peer.switch_id.empty()) fail("right_peer.switch_id is empty");
  if (rw && std::get<RoadwarriorPeer>(p.left_peer).roadwarrior_id.empty()) fail("empty roadwarrior_id");
  if (!rw && std::get<SwitchPeer>(p.left_peer).switch_id == p.right_peer.switch_id) {
    fail("left and right peer are the same switch");
  }
}

void to_json(nlohmann::json& j, const TrafficSelector& s) {
  j = {{"src", s.src.to_string()}, {"dst", s.dst.to_string()}};
  j["protocol"] = s.protocol ? nlohmann::json(*s.protocol) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, TrafficSelector& s) {
  s.src = Ipv4Prefix::parse(j.at("src").get<std::string>());
  s.dst = Ipv4Prefix::parse(j.at("dst").get<std::string>());
  if (j.contains("protocol") && !j.at("protocol").is_null()) {
    s.protocol = j.at("protocol").get<std::uint8_t>();
  } else {
    s.protocol.reset();
  }
}

void to_json(nlohmann::json& j, const RouteSpec& r) {
  j = {{"prefix", r.prefix.to_string()}, {"next_hop_mac", r.next_hop_mac.to_string()}, {"port", r.port}};
}

void from_json(const nlohmann::json& j, RouteSpec& r) {
  r.prefix = Ipv4Prefix::parse(j.at("prefix").get<std::string>());
  r.next_hop_mac = MacAddr::parse(j.at("next_hop_mac").get<std::string>());
  r.port = j.at("port").get<std::uint16_t>();
}

void to_json(nlohmann::json& j, const SwitchPeer& p) {
  j = {{"switch_id", p.switch_id},
       {"endpoint_ip", p.endpoint_ip.to_string()},
       {"network_resource", p.network_resource.to_string()}};
  if (!p.routes.empty()) j["routes"] = p.routes;
}

void from_json(const nlohmann::json& j, SwitchPeer& p) {
  p.switch_id = j.at("switch_id").get<std::string>();
  p.endpoint_ip = Ipv4Addr::parse(j.at("endpoint_ip").get<std::string>());
  p.network_resource = Ipv4Prefix::parse(j.at("network_resource").get<std::string>());
  p.routes = j.value("routes", std::vector<RouteSpec>{});
}

void to_json(nlohmann::json& j, const TunnelProfile& p) {
  j = {{"profile_id", p.profile_id},
       {"mode", to_string(p.mode)},
       {"traffic_selector", p.traffic_selector},
       {"right_peer", p.right_peer},
       {"sa_params",
        {{"suite", to_string(p.sa_params.suite)},
         {"soft_limit", p.sa_params.soft_limit},
         {"hard_limit", p.sa_params.hard_limit}}}};
  if (const auto* rw = std::get_if<RoadwarriorPeer>(&p.left_peer)) {
    j["left_peer"] = {{"roadwarrior_id", rw->roadwarrior_id}};
  } else {
    j["left_peer"] = std::get<SwitchPeer>(p.left_peer);
  }
}

void from_json(const nlohmann::json& j, TunnelProfile& p) {
  p.profile_id = j.at("profile_id").get<std::string>();
  auto mode = j.at("mode").get<std::string>();
  if (mode == "host_to_site") {
    p.mode = TunnelMode::HostToSite;
  } else if (mode == "site_to_site") {
    p.mode = TunnelMode::SiteToSite;
  } else {
    throw Error(ErrorCode::ValidationError, "profile '" + p.profile_id + "': unknown mode '" + mode + "'");
  }
  p.traffic_selector = j.at("traffic_selector").get<TrafficSelector>();
  const auto& left = j.at("left_peer");
  if (left.contains("roadwarrior_id")) {
    p.left_peer = RoadwarriorPeer{left.at("roadwarrior_id").get<std::string>()};
  } else {
    p.left_peer = left.get<SwitchPeer>();
  }
  p.right_peer = j.at("right_peer").get<SwitchPeer>();
  const auto& sa = j.at("sa_params");
  p.sa_params.suite = parse_cipher_suite(sa.at("suite").get<std::string>());
  p.sa_params.soft_limit = sa.at("soft_limit").get<std::uint64_t>();
  p.sa_params.hard_limit = sa.at("hard_limit").get<std::uint64_t>();
}

std::vector<TunnelProfile> load_profiles(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ValidationError, "cannot open profile file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
  auto profiles = j.get<std::vector<TunnelProfile>>();
  for (const auto& p : profiles) validate(p);
  return profiles;
}

void to_json(nlohmann::json& j, const SecurityAssociation& sa) {
  j = {{"spi", sa.spi},
       {"tunnel_src", sa.tunnel_src.to_string()},
       {"tunnel_dst", sa.tunnel_dst.to_string()},
       {"suite", to_string(sa.suite)},
       {"register_index", sa.register_index},
       {"soft_limit", sa.soft_limit},
       {"hard_limit", sa.hard_limit}};
  if (sa.keys) {
    j["aes_key"] = to_hex(sa.keys->aes_key);
    j["ctr_nonce"] = to_hex(sa.keys->ctr_nonce);
    j["hmac_key"] = to_hex(sa.keys->hmac_key);
  }
}

void from_json(const nlohmann::json& j, SecurityAssociation& sa) {
  sa.spi = j.at("spi").get<std::uint32_t>();
  sa.tunnel_src = Ipv4Addr::parse(j.at("tunnel_src").get<std::string>());
  sa.tunnel_dst = Ipv4Addr::parse(j.at("tunnel_dst").get<std::string>());
  sa.suite = parse_cipher_suite(j.at("suite").get<std::string>());
  sa.register_index = j.at("register_index").get<std::uint32_t>();
  sa.soft_limit = j.at("soft_limit").get<std::uint64_t>();
  sa.hard_limit = j.at("hard_limit").get<std::uint64_t>();
  if (j.contains("aes_key")) {
    sa.keys = SaKeys{hex_array<kAesKeyLen>(j.at("aes_key").get<std::string>()),
                     hex_array<kCtrNonceLen>(j.at("ctr_nonce").get<std::string>()),
                     hex_array<kHmacKeyLen>(j.at("hmac_key").get<std::string>())};
  } else {
    sa.keys.reset();
  }
}

}  // namespace espnet
