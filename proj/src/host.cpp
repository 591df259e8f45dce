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

#include "espnet/host.hpp"

#include <algorithm>

namespace espnet {

void HostIpsecStack::apply(const ConfigApply& config) {
  validate(config.sa_in);
  validate(config.sa_out);
  for (const auto& [profile_id, binding] : outbound_) {
    if (profile_id != config.profile_id && binding.selector.dst == config.traffic_selector.dst &&
        binding.selector.protocol == config.traffic_selector.protocol) {
      throw Error(ErrorCode::ConflictingSelector, "selector owned by profile " + profile_id);
    }
  }
  for (std::uint32_t spi : config.retire_in_spis) sad_in_.erase(spi);
  if (!sad_in_.contains(config.sa_in.spi)) {
    sad_in_.emplace(config.sa_in.spi, HostSaState{config.sa_in, config.profile_id});
  }
  auto it = outbound_.find(config.profile_id);
  if (it == outbound_.end() || it->second.sa_out.sa.spi != config.sa_out.spi) {
    outbound_[config.profile_id] =
        OutboundBinding{config.traffic_selector, config.routes, HostSaState{config.sa_out, config.profile_id}};
  } else {
    it->second.selector = config.traffic_selector;
    it->second.routes = config.routes;
  }
  config_cache_[config.profile_id] = config;
}

void HostIpsecStack::teardown(const std::string& profile_id) {
  outbound_.erase(profile_id);
  std::erase_if(sad_in_, [&](const auto& kv) { return kv.second.profile_id == profile_id; });
  config_cache_.erase(profile_id);
}

std::optional<ConfigApply> HostIpsecStack::cached_config(const std::string& profile_id) const {
  auto it = config_cache_.find(profile_id);
  if (it == config_cache_.end()) return std::nullopt;
  return it->second;
}

void HostIpsecStack::count(HostSaState& state) {
  ++state.counter;
  if (state.counter == state.sa.soft_limit && !state.soft_notified) {
    state.soft_notified = true;
    expire_.push_back(ExpireNotice{state.sa.spi, ExpireLevel::Soft});
  }
  if (state.counter == state.sa.hard_limit && !state.hard_notified) {
    state.hard_notified = true;
    expire_.push_back(ExpireNotice{state.sa.spi, ExpireLevel::Hard});
  }
}

Bytes HostIpsecStack::send(ByteView inner_ip) {
  Packet inner = parse_ipv4(inner_ip);
  OutboundBinding* match = nullptr;
  for (auto& [profile_id, binding] : outbound_) {
    const auto& sel = binding.selector;
    if (sel.dst.contains(inner.ipv4.dst) && (!sel.protocol || *sel.protocol == inner.ipv4.protocol)) {
      if (match == nullptr || sel.dst.length > match->selector.dst.length) match = &binding;
    }
  }
  if (match == nullptr) throw Error(ErrorCode::NoSelectorMatch, inner.ipv4.dst.to_string());

  HostSaState& state = match->sa_out;
  count(state);
  if (state.counter > state.sa.hard_limit) {
    throw Error(ErrorCode::HardLimitReached, "spi " + std::to_string(state.sa.spi));
  }
  EspTunnelPacket tunnel = esp_tunnel_encapsulate(state.sa, state.counter, inner_ip);
  Packet outer;
  outer.eth.dst_mac = link_.gateway_mac;
  outer.eth.src_mac = link_.mac;
  outer.ipv4 = tunnel.outer;
  outer.esp = tunnel.esp;
  outer.body = std::move(tunnel.body);
  return serialize_packet(outer);
}

Bytes HostIpsecStack::receive(ByteView frame) {
  Packet p = parse_packet(frame);
  if (!p.esp) return serialize_ipv4(p.ipv4, p.esp, p.body);
  auto it = sad_in_.find(p.esp->spi);
  if (it == sad_in_.end() || it->second.sa.tunnel_src != p.ipv4.src || it->second.sa.tunnel_dst != p.ipv4.dst) {
    throw Error(ErrorCode::UnknownSpi, std::to_string(p.esp->spi));
  }
  HostSaState& state = it->second;
  count(state);
  if (state.counter > state.sa.hard_limit) {
    throw Error(ErrorCode::HardLimitReached, "spi " + std::to_string(state.sa.spi));
  }
  return esp_tunnel_decapsulate(state.sa, *p.esp, p.body);
}

std::vector<ExpireNotice> HostIpsecStack::poll_expire_notices() {
  std::vector<ExpireNotice> out(expire_.begin(), expire_.end());
  expire_.clear();
  return out;
}

RoadwarriorAgent::RoadwarriorAgent(std::string id, std::string token, std::vector<std::string> requests,
                                   HostIpsecStack& stack, SendFn send)
    : id_(std::move(id)),
      token_(std::move(token)),
      requests_(std::move(requests)),
      stack_(stack),
      send_(std::move(send)) {}

void RoadwarriorAgent::send(const AgentMessage& m) {
  if (closed_) {
    errors_.push_back(AgentError{0, ErrorCode::ChannelClosed, "send on closed channel"});
    events_.push_back({"error", "ChannelClosed"});
    return;
  }
  events_.push_back({"send", std::string(message_type(m))});
  send_(m);
}

void RoadwarriorAgent::start() { send(Hello{id_, token_}); }

void RoadwarriorAgent::on_message(const AgentMessage& m) {
  events_.push_back({"recv", std::string(message_type(m))});
  if (const auto* offer = std::get_if<TunnelOffer>(&m)) {
    offered_ = offer->profiles;
    for (const auto& profile_id : requests_) send(TunnelRequest{profile_id});
  } else if (const auto* config = std::get_if<ConfigApply>(&m)) {
    try {
      stack_.apply(*config);
      send(Ack{config->request_id});
    } catch (const Error& e) {
      send(AgentError{config->request_id, e.code(), e.what()});
    }
  } else if (const auto* teardown = std::get_if<Teardown>(&m)) {
    stack_.teardown(teardown->profile_id);
    send(Ack{teardown->request_id});
  } else if (const auto* error = std::get_if<AgentError>(&m)) {
    errors_.push_back(*error);
    events_.push_back({"error", std::string(to_string(error->code)) + ": " + error->message});
  }
}

void RoadwarriorAgent::forward_expire_notices() {
  for (const auto& notice : stack_.poll_expire_notices()) send(notice);
}

void RoadwarriorAgent::on_channel_closed() {
  closed_ = true;
  errors_.push_back(AgentError{0, ErrorCode::ChannelClosed, "controller channel closed"});
  events_.push_back({"error", "ChannelClosed"});
}

}  // namespace espnet
