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

#include "espnet/scenario.hpp"

#include <fstream>
#include <set>

namespace espnet {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::ValidationError, path + ": " + what);
}

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

std::string at_index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
}

const json& required(const json& obj, const std::string& path, std::string_view key) {
  expect_object(obj, path);
  auto it = obj.find(key);
  if (it == obj.end()) fail(join(path, key), "missing required field");
  return *it;
}

const json* optional_field(const json& obj, const std::string& path, std::string_view key) {
  expect_object(obj, path);
  auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

template <class T>
T as(const json& v, const std::string& path) {
  if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    if (v.is_number_unsigned()) {
      auto u = v.get<std::uint64_t>();
      if (u > static_cast<std::uint64_t>(std::numeric_limits<T>::max())) fail(path, "value out of range");
      return static_cast<T>(u);
    }
    auto s = v.get<std::int64_t>();
    if (s < static_cast<std::int64_t>(std::numeric_limits<T>::min()) ||
        (s > 0 && static_cast<std::uint64_t>(s) > static_cast<std::uint64_t>(std::numeric_limits<T>::max()))) {
      fail(path, "value out of range");
    }
    return static_cast<T>(s);
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
  } else {
    // address-like types parsed from strings
    if (!v.is_string()) fail(path, "expected a string");
    try {
      return T::parse(v.get<std::string>());
    } catch (const Error& e) {
      fail(path, e.what());
    }
  }
}

template <class T>
T get(const json& obj, const std::string& path, std::string_view key) {
  return as<T>(required(obj, path, key), join(path, key));
}

template <class T>
T get_or(const json& obj, const std::string& path, std::string_view key, T fallback) {
  const json* v = optional_field(obj, path, key);
  return v == nullptr ? fallback : as<T>(*v, join(path, key));
}

const json& array_field(const json& obj, const std::string& path, std::string_view key, bool require) {
  static const json empty = json::array();
  const json* v = require ? &required(obj, path, key) : optional_field(obj, path, key);
  if (v == nullptr) return empty;
  if (!v->is_array()) fail(join(path, key), "expected an array");
  return *v;
}

RouteSpec parse_route(const json& j, const std::string& path) {
  return RouteSpec{get<Ipv4Prefix>(j, path, "prefix"), get<MacAddr>(j, path, "next_hop_mac"),
                   get<std::uint16_t>(j, path, "port")};
}

SpdRule parse_spd_rule(const json& j, const std::string& path) {
  SpdRule r;
  r.src = get<Ipv4Prefix>(j, path, "src");
  r.dst = get<Ipv4Prefix>(j, path, "dst");
  if (const json* proto = optional_field(j, path, "protocol")) r.protocol = as<std::uint8_t>(*proto, join(path, "protocol"));
  r.priority = get<std::int64_t>(j, path, "priority");
  auto action = get<std::string>(j, path, "action");
  if (action == "bypass") {
    r.action = SpdAction::Bypass;
  } else if (action == "protect") {
    r.action = SpdAction::Protect;
  } else if (action == "discard") {
    r.action = SpdAction::Discard;
  } else {
    fail(join(path, "action"), "expected bypass, protect or discard");
  }
  return r;
}

SwitchSpec parse_switch(const json& j, const std::string& path) {
  SwitchSpec s;
  s.id = get<std::string>(j, path, "id");
  s.endpoint_ip = get<Ipv4Addr>(j, path, "endpoint_ip");
  const json& ports = array_field(j, path, "ports", true);
  for (std::size_t i = 0; i < ports.size(); ++i) {
    std::string p = at_index(join(path, "ports"), i);
    s.ports.push_back(PortConfig{get<std::uint16_t>(ports[i], p, "port"), get<MacAddr>(ports[i], p, "mac")});
  }
  s.register_size = get_or<std::size_t>(j, path, "register_size", 1024);
  const json& routes = array_field(j, path, "routes", false);
  for (std::size_t i = 0; i < routes.size(); ++i) s.routes.push_back(parse_route(routes[i], at_index(join(path, "routes"), i)));
  const json& spd = array_field(j, path, "spd", false);
  for (std::size_t i = 0; i < spd.size(); ++i) s.spd.push_back(parse_spd_rule(spd[i], at_index(join(path, "spd"), i)));
  return s;
}

HostSpec parse_host(const json& j, const std::string& path) {
  HostSpec h;
  h.id = get<std::string>(j, path, "id");
  h.ip = get<Ipv4Addr>(j, path, "ip");
  h.mac = get<MacAddr>(j, path, "mac");
  h.gateway_mac = get<MacAddr>(j, path, "gateway_mac");
  if (const json* rw = optional_field(j, path, "roadwarrior")) {
    h.roadwarrior_token = get<std::string>(*rw, join(path, "roadwarrior"), "token");
  }
  return h;
}

LinkEnd parse_link_end(const json& j, const std::string& path) {
  return LinkEnd{get<std::string>(j, path, "node"), get_or<std::uint16_t>(j, path, "port", 0)};
}

FlowSpec parse_flow(const json& j, const std::string& path) {
  FlowSpec f;
  f.id = get<std::string>(j, path, "id");
  f.src_host = get<std::string>(j, path, "src_host");
  f.dst = get<Ipv4Addr>(j, path, "dst");
  f.packets = get<std::uint64_t>(j, path, "packets");
  f.payload_size = get_or<std::size_t>(j, path, "payload_size", 64);
  f.protocol = get_or<std::uint8_t>(j, path, "protocol", 17);
  auto mode = get_or<std::string>(j, path, "mode", "bypass");
  if (mode == "bypass") {
    f.mode = FlowMode::Bypass;
  } else if (mode == "protect") {
    f.mode = FlowMode::Protect;
  } else {
    fail(join(path, "mode"), "expected bypass or protect");
  }
  return f;
}

TunnelProfile parse_profile(const json& j, const std::string& path) {
  try {
    return j.get<TunnelProfile>();
  } catch (const json::exception& e) {
    fail(path, e.what());
  } catch (const Error& e) {
    fail(path, e.what());
  }
}

}  // namespace

std::string_view to_string(SpdAction a) {
  switch (a) {
    case SpdAction::Bypass: return "bypass";
    case SpdAction::Protect: return "protect";
    case SpdAction::Discard: return "discard";
  }
  return "?";
}

std::string_view to_string(FlowMode m) { return m == FlowMode::Bypass ? "bypass" : "protect"; }

const SwitchSpec* Scenario::find_switch(const std::string& id) const {
  for (const auto& s : switches) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

const HostSpec* Scenario::find_host(const std::string& id) const {
  for (const auto& h : hosts) {
    if (h.id == id) return &h;
  }
  return nullptr;
}

Scenario parse_scenario(const json& j) {
  Scenario s;
  expect_object(j, "");
  s.name = get_or<std::string>(j, "", "name", "");
  s.seed = get_or<std::uint64_t>(j, "", "seed", 1);
  s.runs = get_or<std::uint32_t>(j, "", "runs", 1);
  s.link_delay = get_or<std::uint64_t>(j, "", "link_delay", 1);
  s.control_latency = get_or<std::uint64_t>(j, "", "control_latency", 1);
  s.packet_interval = get_or<std::uint64_t>(j, "", "packet_interval", 1);

  const json& switches = array_field(j, "", "switches", true);
  for (std::size_t i = 0; i < switches.size(); ++i) s.switches.push_back(parse_switch(switches[i], at_index("switches", i)));
  const json& hosts = array_field(j, "", "hosts", true);
  for (std::size_t i = 0; i < hosts.size(); ++i) s.hosts.push_back(parse_host(hosts[i], at_index("hosts", i)));
  const json& links = array_field(j, "", "links", true);
  for (std::size_t i = 0; i < links.size(); ++i) {
    std::string p = at_index("links", i);
    s.links.push_back(LinkSpec{parse_link_end(required(links[i], p, "from"), join(p, "from")),
                               parse_link_end(required(links[i], p, "to"), join(p, "to"))});
  }
  const json& profiles = array_field(j, "", "profiles", false);
  for (std::size_t i = 0; i < profiles.size(); ++i) s.profiles.push_back(parse_profile(profiles[i], at_index("profiles", i)));
  if (const json* script = optional_field(j, "", "agent_script")) {
    expect_object(*script, "agent_script");
    for (const auto& [rw, list] : script->items()) {
      std::string p = join("agent_script", rw);
      if (!list.is_array()) fail(p, "expected an array of profile ids");
      for (std::size_t i = 0; i < list.size(); ++i) s.agent_script[rw].push_back(as<std::string>(list[i], at_index(p, i)));
    }
  }
  const json& traffic = array_field(j, "", "traffic", false);
  for (std::size_t i = 0; i < traffic.size(); ++i) s.traffic.push_back(parse_flow(traffic[i], at_index("traffic", i)));
  const json& offline = array_field(j, "", "offline", false);
  for (std::size_t i = 0; i < offline.size(); ++i) s.offline.push_back(as<std::string>(offline[i], at_index("offline", i)));

  validate(s);
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ValidationError, path + ": cannot open scenario file");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
  return parse_scenario(j);
}

void validate(const Scenario& s) {
  if (s.runs == 0) fail("runs", "must be at least 1");
  if (s.link_delay == 0) fail("link_delay", "must be at least 1 tick");
  if (s.control_latency == 0) fail("control_latency", "must be at least 1 tick");
  if (s.packet_interval == 0) fail("packet_interval", "must be at least 1 tick");
  if (s.switches.empty()) fail("switches", "at least one switch is required");

  std::set<std::string> ids;
  std::set<Ipv4Addr> endpoints;
  for (std::size_t i = 0; i < s.switches.size(); ++i) {
    const auto& sw = s.switches[i];
    std::string p = at_index("switches", i);
    if (sw.id.empty()) fail(join(p, "id"), "must not be empty");
    if (!ids.insert(sw.id).second) fail(join(p, "id"), "duplicate node id '" + sw.id + "'");
    if (!endpoints.insert(sw.endpoint_ip).second) fail(join(p, "endpoint_ip"), "duplicate tunnel endpoint");
    if (sw.ports.empty()) fail(join(p, "ports"), "at least one port is required");
    if (sw.register_size == 0) fail(join(p, "register_size"), "must be positive");
    std::set<std::uint16_t> ports;
    for (std::size_t k = 0; k < sw.ports.size(); ++k) {
      if (!ports.insert(sw.ports[k].port).second) fail(at_index(join(p, "ports"), k), "duplicate port number");
    }
    for (std::size_t k = 0; k < sw.routes.size(); ++k) {
      if (!ports.contains(sw.routes[k].port)) fail(join(at_index(join(p, "routes"), k), "port"), "no such port");
    }
    std::set<std::int64_t> priorities;
    for (std::size_t k = 0; k < sw.spd.size(); ++k) {
      if (!priorities.insert(sw.spd[k].priority).second) {
        fail(join(at_index(join(p, "spd"), k), "priority"), "duplicate priority");
      }
      if (sw.spd[k].priority >= 1000) {
        fail(join(at_index(join(p, "spd"), k), "priority"), "static rules must use priorities below 1000");
      }
    }
  }
  for (std::size_t i = 0; i < s.hosts.size(); ++i) {
    const auto& h = s.hosts[i];
    std::string p = at_index("hosts", i);
    if (h.id.empty()) fail(join(p, "id"), "must not be empty");
    if (!ids.insert(h.id).second) fail(join(p, "id"), "duplicate node id '" + h.id + "'");
  }

  std::set<LinkEnd> senders;
  std::set<LinkEnd> receivers;
  auto check_end = [&](const LinkEnd& end, const std::string& p) {
    if (const SwitchSpec* sw = s.find_switch(end.node)) {
      bool known = std::any_of(sw->ports.begin(), sw->ports.end(), [&](const PortConfig& c) { return c.port == end.port; });
      if (!known) fail(join(p, "port"), "switch '" + end.node + "' has no port " + std::to_string(end.port));
    } else if (s.find_host(end.node) != nullptr) {
      if (end.port != 0) fail(join(p, "port"), "hosts only have port 0");
    } else {
      fail(join(p, "node"), "unknown node '" + end.node + "'");
    }
  };
  for (std::size_t i = 0; i < s.links.size(); ++i) {
    std::string p = at_index("links", i);
    check_end(s.links[i].from, join(p, "from"));
    check_end(s.links[i].to, join(p, "to"));
    if (s.links[i].from.node == s.links[i].to.node) fail(p, "link must connect two different nodes");
    if (!senders.insert(s.links[i].from).second) fail(join(p, "from"), "port already has an outgoing link");
    if (!receivers.insert(s.links[i].to).second) fail(join(p, "to"), "port already has an incoming link");
  }

  std::set<std::string> profile_ids;
  for (std::size_t i = 0; i < s.profiles.size(); ++i) {
    const auto& pr = s.profiles[i];
    std::string p = at_index("profiles", i);
    try {
      validate(pr);
    } catch (const Error& e) {
      fail(p, e.what());
    }
    if (!profile_ids.insert(pr.profile_id).second) fail(join(p, "profile_id"), "duplicate profile id");
    auto check_peer = [&](const SwitchPeer& peer, const std::string& pp) {
      const SwitchSpec* sw = s.find_switch(peer.switch_id);
      if (sw == nullptr) fail(join(pp, "switch_id"), "unknown switch '" + peer.switch_id + "'");
      if (sw->endpoint_ip != peer.endpoint_ip) fail(join(pp, "endpoint_ip"), "does not match the switch endpoint");
      for (std::size_t k = 0; k < peer.routes.size(); ++k) {
        bool known = std::any_of(sw->ports.begin(), sw->ports.end(),
                                 [&](const PortConfig& c) { return c.port == peer.routes[k].port; });
        if (!known) fail(join(at_index(join(pp, "routes"), k), "port"), "no such port");
      }
    };
    if (const auto* left = std::get_if<SwitchPeer>(&pr.left_peer)) {
      check_peer(*left, join(p, "left_peer"));
    } else {
      const auto& rw = std::get<RoadwarriorPeer>(pr.left_peer).roadwarrior_id;
      const HostSpec* h = s.find_host(rw);
      if (h == nullptr || !h->roadwarrior_token) {
        fail(join(join(p, "left_peer"), "roadwarrior_id"), "unknown roadwarrior host '" + rw + "'");
      }
    }
    check_peer(pr.right_peer, join(p, "right_peer"));
  }

  for (const auto& [rw, requested] : s.agent_script) {
    std::string p = join("agent_script", rw);
    const HostSpec* h = s.find_host(rw);
    if (h == nullptr || !h->roadwarrior_token) fail(p, "unknown roadwarrior host '" + rw + "'");
    for (std::size_t i = 0; i < requested.size(); ++i) {
      if (!profile_ids.contains(requested[i])) fail(at_index(p, i), "unknown profile '" + requested[i] + "'");
    }
  }

  std::set<std::string> flow_ids;
  for (std::size_t i = 0; i < s.traffic.size(); ++i) {
    const auto& f = s.traffic[i];
    std::string p = at_index("traffic", i);
    if (!flow_ids.insert(f.id).second) fail(join(p, "id"), "duplicate flow id");
    if (s.find_host(f.src_host) == nullptr) fail(join(p, "src_host"), "unknown host '" + f.src_host + "'");
    if (f.packets == 0) fail(join(p, "packets"), "must be positive");
    if (f.payload_size < kMinPayload || f.payload_size > kMaxPayload) {
      fail(join(p, "payload_size"),
           "must be between " + std::to_string(kMinPayload) + " and " + std::to_string(kMaxPayload));
    }
    if (f.protocol == kProtoEsp) fail(join(p, "protocol"), "ESP is reserved for tunnel traffic");
  }

  for (std::size_t i = 0; i < s.offline.size(); ++i) {
    if (s.find_switch(s.offline[i]) == nullptr) fail(at_index("offline", i), "unknown switch '" + s.offline[i] + "'");
  }
}

}  // namespace espnet
