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

// Ethernet / IPv4 / ESP wire codec.
//
// All multi-byte fields are network byte order on the wire. Only IPv4
// without options (ihl == 5) is accepted; ESP frames carry an 8-byte
// header (SPI, sequence) followed by an opaque body that the cipher suites
// interpret.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "espnet/common.hpp"

namespace espnet {

inline constexpr std::uint16_t kEthertypeIpv4 = 0x0800;
inline constexpr std::uint8_t kProtoIpInIp = 4;
inline constexpr std::uint8_t kProtoEsp = 50;
inline constexpr std::size_t kEthernetHeaderLen = 14;
inline constexpr std::size_t kIpv4HeaderLen = 20;
inline constexpr std::size_t kEspHeaderLen = 8;
inline constexpr std::size_t kMinFrameLen = kEthernetHeaderLen + kIpv4HeaderLen;
inline constexpr std::uint32_t kMinSpi = 256;

struct EthernetHeader {
  MacAddr dst_mac;
  MacAddr src_mac;
  std::uint16_t ethertype = kEthertypeIpv4;
  bool operator==(const EthernetHeader&) const = default;
};

struct Ipv4Header {
  std::uint8_t version = 4;
  std::uint8_t ihl = 5;
  std::uint8_t dscp_ecn = 0;
  std::uint16_t total_length = kIpv4HeaderLen;
  std::uint16_t identification = 0;
  std::uint16_t flags_frag = 0;
  std::uint8_t ttl = 64;
  std::uint8_t protocol = 0;
  std::uint16_t checksum = 0;
  Ipv4Addr src;
  Ipv4Addr dst;
  bool operator==(const Ipv4Header&) const = default;
};

struct EspHeader {
  std::uint32_t spi = 0;
  std::uint32_t seq = 0;
  bool operator==(const EspHeader&) const = default;
};

enum class SpdMark : std::uint8_t { Unset = 0, Bypass = 1, Protect = 2 };

struct UserMetadata {
  SpdMark spd_mark = SpdMark::Unset;
  bool soft_limit_reached = false;
  bool hard_limit_reached = false;
  std::optional<std::uint16_t> egress_port;
  bool dropped = false;
  bool operator==(const UserMetadata&) const = default;
};

struct Packet {
  EthernetHeader eth;
  Ipv4Header ipv4;
  std::optional<EspHeader> esp;
  Bytes body;
  UserMetadata meta;
  bool operator==(const Packet&) const = default;
};

struct EspTrailer {
  Bytes padding;
  std::uint8_t pad_length = 0;
  std::uint8_t next_header = kProtoIpInIp;
  Bytes icv;
  bool operator==(const EspTrailer&) const = default;
};

struct FramedPlaintext {
  Bytes bytes;  // plaintext || padding || pad_length || next_header
  EspTrailer trailer;
};

/// Parses a raw frame. Throws Error with TruncatedPacket, BadChecksum,
/// UnsupportedEthertype, UnsupportedIhl or MalformedHeader.
Packet parse_packet(ByteView frame);

/// Serializes with freshly computed total_length and header checksum.
Bytes serialize_packet(const Packet& p);

/// Serializes only the IPv4 datagram (no Ethernet header).
Bytes serialize_ipv4(const Ipv4Header& header, const std::optional<EspHeader>& esp, ByteView body);

/// Parses a bare IPv4 datagram: the same checks as parse_packet minus Ethernet.
/// The returned Packet has a default Ethernet header.
Packet parse_ipv4(ByteView datagram);

/// RFC 1071 one's-complement checksum of a 20-byte header. The checksum
/// field is expected to be zero.
std::uint16_t ipv4_checksum(ByteView header_bytes);
bool ipv4_checksum_valid(ByteView header_bytes);

/// Appends RFC 4303 padding (1, 2, 3, ...) so that payload + padding + 2 is a
/// multiple of 4, followed by pad length and next header (IP-in-IP). The
/// trailer's icv is sized to icv_len and left zeroed for the suite to fill.
FramedPlaintext esp_frame(ByteView plaintext, std::size_t icv_len = 0);

/// Inverse of esp_frame. Throws BadPadding or BadNextHeader.
Bytes esp_unframe(ByteView framed);

inline std::size_t esp_pad_length(std::size_t plaintext_len) {
  return (4 - (plaintext_len + 2) % 4) % 4;
}

// Hex-dump fixtures: one frame per line, lowercase hex, no separators.
std::vector<Bytes> read_hex_frames(const std::string& path);
void write_hex_frames(const std::string& path, const std::vector<Bytes>& frames);

}  // namespace espnet
