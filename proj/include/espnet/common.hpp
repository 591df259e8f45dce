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

#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace espnet {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

enum class ErrorCode {
  // packet codec
  TruncatedPacket,
  BadChecksum,
  UnsupportedEthertype,
  UnsupportedIhl,
  MalformedHeader,
  InvariantViolation,
  WrongLength,
  // crypto suites
  SequenceOverflow,
  SpiMismatch,
  IcvMismatch,
  BadPadding,
  BadNextHeader,
  MalformedCiphertext,
  // tables and switch control API
  DuplicateKey,
  DuplicatePriority,
  SchemaMismatch,
  UnknownTable,
  UnknownAction,
  NoSuchEntry,
  IndexOutOfRange,
  RegisterInUse,
  // controller and agents
  SpiExhaustion,
  PeerUnreachable,
  InsertRejected,
  UnknownSpi,
  UnknownProfile,
  UnknownRoadwarrior,
  AuthenticationFailed,
  ConflictingSelector,
  NoSelectorMatch,
  HardLimitReached,
  ChannelClosed,
  // simulator
  ValidationError,
  Deadlock,
  ParseError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct MacAddr {
  std::array<std::uint8_t, 6> octets{};

  static MacAddr parse(std::string_view text);
  std::string to_string() const;
  auto operator<=>(const MacAddr&) const = default;
};

struct Ipv4Addr {
  std::uint32_t value = 0;

  static Ipv4Addr parse(std::string_view text);
  std::string to_string() const;
  auto operator<=>(const Ipv4Addr&) const = default;
};

struct Ipv4Prefix {
  Ipv4Addr addr;
  std::uint8_t length = 0;

  /// Accepts "a.b.c.d/len" or a bare address (treated as /32). Host bits are cleared.
  static Ipv4Prefix parse(std::string_view text);
  std::string to_string() const;
  std::uint32_t mask() const;
  bool contains(Ipv4Addr a) const;
  auto operator<=>(const Ipv4Prefix&) const = default;
};

std::string to_hex(ByteView bytes);
Bytes from_hex(std::string_view hex);

// Big-endian accessors over a byte buffer.
inline std::uint16_t load_be16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}
inline std::uint32_t load_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
         (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}
inline void store_be16(std::uint8_t* p, std::uint16_t v) {
  p[0] = static_cast<std::uint8_t>(v >> 8);
  p[1] = static_cast<std::uint8_t>(v);
}
inline void store_be32(std::uint8_t* p, std::uint32_t v) {
  p[0] = static_cast<std::uint8_t>(v >> 24);
  p[1] = static_cast<std::uint8_t>(v >> 16);
  p[2] = static_cast<std::uint8_t>(v >> 8);
  p[3] = static_cast<std::uint8_t>(v);
}

}  // namespace espnet
