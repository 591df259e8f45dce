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

// Messages exchanged between the controller and roadwarrior agents, and
// their length-prefixed JSON framing for byte channels.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "espnet/profile.hpp"

namespace espnet {

struct Hello {
  std::string roadwarrior_id;
  std::string token;
  bool operator==(const Hello&) const = default;
};

struct ProfileSummary {
  std::string profile_id;
  Ipv4Prefix network_resource;
  CipherSuite suite = CipherSuite::Null;
  bool operator==(const ProfileSummary&) const = default;
};

struct TunnelOffer {
  std::vector<ProfileSummary> profiles;
  bool operator==(const TunnelOffer&) const = default;
};

struct TunnelRequest {
  std::string profile_id;
  bool operator==(const TunnelRequest&) const = default;
};

struct ConfigApply {
  std::uint64_t request_id = 0;
  std::string profile_id;
  SecurityAssociation sa_in;   // remote -> host
  SecurityAssociation sa_out;  // host -> remote
  TrafficSelector traffic_selector;
  std::vector<Ipv4Prefix> routes;
  std::vector<std::uint32_t> retire_in_spis;  // inbound SAs to remove
  bool operator==(const ConfigApply&) const = default;
};

enum class ExpireLevel : std::uint8_t { Soft, Hard };

struct ExpireNotice {
  std::uint32_t spi = 0;
  ExpireLevel level = ExpireLevel::Soft;
  bool operator==(const ExpireNotice&) const = default;
};

struct Teardown {
  std::uint64_t request_id = 0;
  std::string profile_id;
  bool operator==(const Teardown&) const = default;
};

struct Ack {
  std::uint64_t request_id = 0;
  bool operator==(const Ack&) const = default;
};

struct AgentError {
  std::uint64_t request_id = 0;
  ErrorCode code = ErrorCode::ParseError;
  std::string message;
  bool operator==(const AgentError&) const = default;
};

using AgentMessage =
    std::variant<Hello, TunnelOffer, TunnelRequest, ConfigApply, ExpireNotice, Teardown, Ack, AgentError>;

std::string_view message_type(const AgentMessage& m);

nlohmann::json to_json(const AgentMessage& m);
AgentMessage agent_message_from_json(const nlohmann::json& j);

/// 4-byte big-endian length followed by the UTF-8 JSON document.
Bytes encode_frame(const AgentMessage& m);

/// Incremental decoder for a byte stream of frames.
class FrameDecoder {
 public:
  void feed(ByteView bytes);
  /// Next complete message, if any. Throws ParseError on malformed JSON.
  std::optional<AgentMessage> next();
  std::size_t buffered() const { return buffer_.size(); }

 private:
  Bytes buffer_;
};

}  // namespace espnet
