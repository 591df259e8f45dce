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

#include "espnet/agent_protocol.hpp"

namespace espnet {

namespace {

constexpr std::uint32_t kMaxFrameLen = 1u << 20;

const std::vector<ErrorCode>& all_error_codes() {
  static const std::vector<ErrorCode> codes = [] {
    std::vector<ErrorCode> out;
    for (int i = 0; i <= static_cast<int>(ErrorCode::ParseError); ++i) out.push_back(static_cast<ErrorCode>(i));
    return out;
  }();
  return codes;
}

ErrorCode parse_error_code(const std::string& name) {
  for (ErrorCode c : all_error_codes()) {
    if (to_string(c) == name) return c;
  }
  throw Error(ErrorCode::ParseError, "unknown error code '" + name + "'");
}

}  // namespace

std::string_view message_type(const AgentMessage& m) {
  struct Visitor {
    std::string_view operator()(const Hello&) const { return "Hello"; }
    std::string_view operator()(const TunnelOffer&) const { return "TunnelOffer"; }
    std::string_view operator()(const TunnelRequest&) const { return "TunnelRequest"; }
    std::string_view operator()(const ConfigApply&) const { return "ConfigApply"; }
    std::string_view operator()(const ExpireNotice&) const { return "ExpireNotice"; }
    std::string_view operator()(const Teardown&) const { return "Teardown"; }
    std::string_view operator()(const Ack&) const { return "Ack"; }
    std::string_view operator()(const AgentError&) const { return "Error"; }
  };
  return std::visit(Visitor{}, m);
}

nlohmann::json to_json(const AgentMessage& m) {
  nlohmann::json j;
  j["type"] = message_type(m);
  if (const auto* h = std::get_if<Hello>(&m)) {
    j["roadwarrior_id"] = h->roadwarrior_id;
    j["token"] = h->token;
  } else if (const auto* o = std::get_if<TunnelOffer>(&m)) {
    j["profiles"] = nlohmann::json::array();
    for (const auto& s : o->profiles) {
      j["profiles"].push_back({{"profile_id", s.profile_id},
                               {"network_resource", s.network_resource.to_string()},
                               {"suite", to_string(s.suite)}});
    }
  } else if (const auto* r = std::get_if<TunnelRequest>(&m)) {
    j["profile_id"] = r->profile_id;
  } else if (const auto* c = std::get_if<ConfigApply>(&m)) {
    j["request_id"] = c->request_id;
    j["profile_id"] = c->profile_id;
    j["sa_in"] = c->sa_in;
    j["sa_out"] = c->sa_out;
    j["traffic_selector"] = c->traffic_selector;
    j["routes"] = nlohmann::json::array();
    for (const auto& p : c->routes) j["routes"].push_back(p.to_string());
    j["retire_in_spis"] = c->retire_in_spis;
  } else if (const auto* e = std::get_if<ExpireNotice>(&m)) {
    j["spi"] = e->spi;
    j["level"] = e->level == ExpireLevel::Soft ? "soft" : "hard";
  } else if (const auto* t = std::get_if<Teardown>(&m)) {
    j["request_id"] = t->request_id;
    j["profile_id"] = t->profile_id;
  } else if (const auto* a = std::get_if<Ack>(&m)) {
    j["request_id"] = a->request_id;
  } else if (const auto* err = std::get_if<AgentError>(&m)) {
    j["request_id"] = err->request_id;
    j["code"] = to_string(err->code);
    j["message"] = err->message;
  }
  return j;
}

AgentMessage agent_message_from_json(const nlohmann::json& j) {
  try {
    auto type = j.at("type").get<std::string>();
    if (type == "Hello") return Hello{j.at("roadwarrior_id").get<std::string>(), j.at("token").get<std::string>()};
    if (type == "TunnelOffer") {
      TunnelOffer o;
      for (const auto& s : j.at("profiles")) {
        o.profiles.push_back({s.at("profile_id").get<std::string>(),
                              Ipv4Prefix::parse(s.at("network_resource").get<std::string>()),
                              parse_cipher_suite(s.at("suite").get<std::string>())});
      }
      return o;
    }
    if (type == "TunnelRequest") return TunnelRequest{j.at("profile_id").get<std::string>()};
    if (type == "ConfigApply") {
      ConfigApply c;
      c.request_id = j.at("request_id").get<std::uint64_t>();
      c.profile_id = j.at("profile_id").get<std::string>();
      c.sa_in = j.at("sa_in").get<SecurityAssociation>();
      c.sa_out = j.at("sa_out").get<SecurityAssociation>();
      c.traffic_selector = j.at("traffic_selector").get<TrafficSelector>();
      for (const auto& r : j.at("routes")) c.routes.push_back(Ipv4Prefix::parse(r.get<std::string>()));
      c.retire_in_spis = j.value("retire_in_spis", std::vector<std::uint32_t>{});
      return c;
    }
    if (type == "ExpireNotice") {
      auto level = j.at("level").get<std::string>();
      if (level != "soft" && level != "hard") throw Error(ErrorCode::ParseError, "bad expire level");
      return ExpireNotice{j.at("spi").get<std::uint32_t>(), level == "soft" ? ExpireLevel::Soft : ExpireLevel::Hard};
    }
    if (type == "Teardown") return Teardown{j.at("request_id").get<std::uint64_t>(), j.at("profile_id").get<std::string>()};
    if (type == "Ack") return Ack{j.at("request_id").get<std::uint64_t>()};
    if (type == "Error") {
      return AgentError{j.at("request_id").get<std::uint64_t>(), parse_error_code(j.at("code").get<std::string>()),
                        j.at("message").get<std::string>()};
    }
    throw Error(ErrorCode::ParseError, "unknown agent message type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("agent message: ") + e.what());
  }
}

Bytes encode_frame(const AgentMessage& m) {
  std::string text = to_json(m).dump();
  Bytes out(4 + text.size());
  store_be32(out.data(), static_cast<std::uint32_t>(text.size()));
  std::copy(text.begin(), text.end(), out.begin() + 4);
  return out;
}

void FrameDecoder::feed(ByteView bytes) { buffer_.insert(buffer_.end(), bytes.begin(), bytes.end()); }

std::optional<AgentMessage> FrameDecoder::next() {
  if (buffer_.size() < 4) return std::nullopt;
  std::uint32_t len = load_be32(buffer_.data());
  if (len > kMaxFrameLen) throw Error(ErrorCode::ParseError, "frame length " + std::to_string(len));
  if (buffer_.size() < 4 + std::size_t{len}) return std::nullopt;
  std::string text(buffer_.begin() + 4, buffer_.begin() + 4 + len);
  buffer_.erase(buffer_.begin(), buffer_.begin() + 4 + len);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("frame payload: ") + e.what());
  }
  return agent_message_from_json(j);
}

}  // namespace espnet
