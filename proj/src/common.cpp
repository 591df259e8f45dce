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

#include "espnet/common.hpp"

#include <charconv>
#include <cstdio>

namespace espnet {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::TruncatedPacket: return "TruncatedPacket";
    case ErrorCode::BadChecksum: return "BadChecksum";
    case ErrorCode::UnsupportedEthertype: return "UnsupportedEthertype";
    case ErrorCode::UnsupportedIhl: return "UnsupportedIhl";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::WrongLength: return "WrongLength";
    case ErrorCode::SequenceOverflow: return "SequenceOverflow";
    case ErrorCode::SpiMismatch: return "SpiMismatch";
    case ErrorCode::IcvMismatch: return "IcvMismatch";
    case ErrorCode::BadPadding: return "BadPadding";
    case ErrorCode::BadNextHeader: return "BadNextHeader";
    case ErrorCode::MalformedCiphertext: return "MalformedCiphertext";
    case ErrorCode::DuplicateKey: return "DuplicateKey";
    case ErrorCode::DuplicatePriority: return "DuplicatePriority";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::UnknownTable: return "UnknownTable";
    case ErrorCode::UnknownAction: return "UnknownAction";
    case ErrorCode::NoSuchEntry: return "NoSuchEntry";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::RegisterInUse: return "RegisterInUse";
    case ErrorCode::SpiExhaustion: return "SpiExhaustion";
    case ErrorCode::PeerUnreachable: return "PeerUnreachable";
    case ErrorCode::InsertRejected: return "InsertRejected";
    case ErrorCode::UnknownSpi: return "UnknownSpi";
    case ErrorCode::UnknownProfile: return "UnknownProfile";
    case ErrorCode::UnknownRoadwarrior: return "UnknownRoadwarrior";
    case ErrorCode::AuthenticationFailed: return "AuthenticationFailed";
    case ErrorCode::ConflictingSelector: return "ConflictingSelector";
    case ErrorCode::NoSelectorMatch: return "NoSelectorMatch";
    case ErrorCode::HardLimitReached: return "HardLimitReached";
    case ErrorCode::ChannelClosed: return "ChannelClosed";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::Deadlock: return "Deadlock";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

template <typename T>
T parse_number(std::string_view text, T max, std::string_view what) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty() || value > max) {
    throw Error(ErrorCode::ParseError, "invalid " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

MacAddr MacAddr::parse(std::string_view text) {
  MacAddr mac;
  if (text.size() != 17) throw Error(ErrorCode::ParseError, "invalid MAC '" + std::string(text) + "'");
  for (std::size_t i = 0; i < 6; ++i) {
    int hi = hex_value(text[i * 3]);
    int lo = hex_value(text[i * 3 + 1]);
    if (hi < 0 || lo < 0 || (i < 5 && text[i * 3 + 2] != ':')) {
      throw Error(ErrorCode::ParseError, "invalid MAC '" + std::string(text) + "'");
    }
    mac.octets[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return mac;
}

std::string MacAddr::to_string() const {
  char buf[18];
  std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", octets[0], octets[1], octets[2],
                octets[3], octets[4], octets[5]);
  return buf;
}

Ipv4Addr Ipv4Addr::parse(std::string_view text) {
  std::uint32_t value = 0;
  std::size_t start = 0;
  for (int i = 0; i < 4; ++i) {
    std::size_t end = text.find('.', start);
    if ((i < 3) != (end != std::string_view::npos)) {
      throw Error(ErrorCode::ParseError, "invalid IPv4 address '" + std::string(text) + "'");
    }
    auto part = text.substr(start, i < 3 ? end - start : std::string_view::npos);
    value = value << 8 | parse_number<std::uint32_t>(part, 255, "IPv4 address");
    start = end + 1;
  }
  return Ipv4Addr{value};
}

std::string Ipv4Addr::to_string() const {
  return std::to_string(value >> 24) + "." + std::to_string((value >> 16) & 0xff) + "." +
         std::to_string((value >> 8) & 0xff) + "." + std::to_string(value & 0xff);
}

Ipv4Prefix Ipv4Prefix::parse(std::string_view text) {
  Ipv4Prefix p;
  auto slash = text.find('/');
  if (slash == std::string_view::npos) {
    p.addr = Ipv4Addr::parse(text);
    p.length = 32;
    return p;
  }
  p.addr = Ipv4Addr::parse(text.substr(0, slash));
  p.length = parse_number<std::uint8_t>(text.substr(slash + 1), 32, "prefix length");
  p.addr.value &= p.mask();
  return p;
}

std::string Ipv4Prefix::to_string() const { return addr.to_string() + "/" + std::to_string(length); }

std::uint32_t Ipv4Prefix::mask() const {
  return length == 0 ? 0u : ~std::uint32_t{0} << (32 - length);
}

bool Ipv4Prefix::contains(Ipv4Addr a) const { return (a.value & mask()) == addr.value; }

std::string to_hex(ByteView bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw Error(ErrorCode::ParseError, "odd-length hex string");
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = hex_value(hex[2 * i]);
    int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw Error(ErrorCode::ParseError, "non-hex character");
    out[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return out;
}

}  // namespace espnet
