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

#include "espnet/packet.hpp"

#include <algorithm>
#include <fstream>

namespace espnet {

namespace {

void write_ipv4_header(std::uint8_t* out, const Ipv4Header& h, std::uint16_t total_length) {
  out[0] = static_cast<std::uint8_t>(h.version << 4 | h.ihl);
  out[1] = h.dscp_ecn;
  store_be16(out + 2, total_length);
  store_be16(out + 4, h.identification);
  store_be16(out + 6, h.flags_frag);
  out[8] = h.ttl;
  out[9] = h.protocol;
  store_be16(out + 10, 0);
  store_be32(out + 12, h.src.value);
  store_be32(out + 16, h.dst.value);
  store_be16(out + 10, ipv4_checksum(ByteView(out, kIpv4HeaderLen)));
}

void check_invariants(const Ipv4Header& h, const std::optional<EspHeader>& esp, std::size_t body_len) {
  if (h.version != 4 || h.ihl != 5) {
    throw Error(ErrorCode::InvariantViolation, "only IPv4 without options is supported");
  }
  if (esp.has_value() != (h.protocol == kProtoEsp)) {
    throw Error(ErrorCode::InvariantViolation, "esp header present iff protocol == 50");
  }
  std::size_t total = kIpv4HeaderLen + (esp ? kEspHeaderLen : 0) + body_len;
  if (total > 0xffff) throw Error(ErrorCode::InvariantViolation, "datagram exceeds 65535 bytes");
}

// Shared by parse_packet and parse_ipv4; `ip` starts at the IPv4 header and
// extends to the end of the frame.
void parse_ipv4_into(ByteView ip, Packet& p) {
  if (ip.size() < kIpv4HeaderLen) throw Error(ErrorCode::TruncatedPacket, "short IPv4 header");
  const std::uint8_t* h = ip.data();
  p.ipv4.version = h[0] >> 4;
  p.ipv4.ihl = h[0] & 0x0f;
  if (p.ipv4.version != 4) throw Error(ErrorCode::MalformedHeader, "IP version is not 4");
  if (p.ipv4.ihl != 5) throw Error(ErrorCode::UnsupportedIhl, "ihl " + std::to_string(p.ipv4.ihl));
  if (!ipv4_checksum_valid(ip.first(kIpv4HeaderLen))) {
    throw Error(ErrorCode::BadChecksum, "IPv4 header checksum mismatch");
  }
  p.ipv4.dscp_ecn = h[1];
  p.ipv4.total_length = load_be16(h + 2);
  p.ipv4.identification = load_be16(h + 4);
  p.ipv4.flags_frag = load_be16(h + 6);
  p.ipv4.ttl = h[8];
  p.ipv4.protocol = h[9];
  p.ipv4.checksum = load_be16(h + 10);
  p.ipv4.src = Ipv4Addr{load_be32(h + 12)};
  p.ipv4.dst = Ipv4Addr{load_be32(h + 16)};

  if (p.ipv4.total_length > ip.size()) {
    throw Error(ErrorCode::TruncatedPacket, "total_length exceeds frame");
  }
  if (p.ipv4.total_length < kIpv4HeaderLen || p.ipv4.total_length != ip.size()) {
    throw Error(ErrorCode::MalformedHeader, "total_length does not match frame length");
  }
  auto rest = ip.subspan(kIpv4HeaderLen);
  if (p.ipv4.protocol == kProtoEsp) {
    if (rest.size() < kEspHeaderLen) throw Error(ErrorCode::TruncatedPacket, "short ESP header");
    p.esp = EspHeader{load_be32(rest.data()), load_be32(rest.data() + 4)};
    rest = rest.subspan(kEspHeaderLen);
  }
  p.body.assign(rest.begin(), rest.end());
}

}  // namespace

Packet parse_packet(ByteView frame) {
  if (frame.size() < kMinFrameLen) {
    throw Error(ErrorCode::TruncatedPacket, std::to_string(frame.size()) + " bytes");
  }
  Packet p;
  std::copy_n(frame.data(), 6, p.eth.dst_mac.octets.begin());
  std::copy_n(frame.data() + 6, 6, p.eth.src_mac.octets.begin());
  p.eth.ethertype = load_be16(frame.data() + 12);
  if (p.eth.ethertype != kEthertypeIpv4) {
    throw Error(ErrorCode::UnsupportedEthertype, "ethertype " + std::to_string(p.eth.ethertype));
  }
  parse_ipv4_into(frame.subspan(kEthernetHeaderLen), p);
  return p;
}

Packet parse_ipv4(ByteView datagram) {
  Packet p;
  parse_ipv4_into(datagram, p);
  return p;
}

Bytes serialize_ipv4(const Ipv4Header& header, const std::optional<EspHeader>& esp, ByteView body) {
  check_invariants(header, esp, body.size());
  std::size_t total = kIpv4HeaderLen + (esp ? kEspHeaderLen : 0) + body.size();
  Bytes out(total);
  write_ipv4_header(out.data(), header, static_cast<std::uint16_t>(total));
  std::uint8_t* cursor = out.data() + kIpv4HeaderLen;
  if (esp) {
    store_be32(cursor, esp->spi);
    store_be32(cursor + 4, esp->seq);
    cursor += kEspHeaderLen;
  }
  std::copy(body.begin(), body.end(), cursor);
  return out;
}

Bytes serialize_packet(const Packet& p) {
  if (p.eth.ethertype != kEthertypeIpv4) {
    throw Error(ErrorCode::InvariantViolation, "ethertype must be IPv4");
  }
  Bytes ip = serialize_ipv4(p.ipv4, p.esp, p.body);
  Bytes out(kEthernetHeaderLen + ip.size());
  std::copy(p.eth.dst_mac.octets.begin(), p.eth.dst_mac.octets.end(), out.begin());
  std::copy(p.eth.src_mac.octets.begin(), p.eth.src_mac.octets.end(), out.begin() + 6);
  store_be16(out.data() + 12, p.eth.ethertype);
  std::copy(ip.begin(), ip.end(), out.begin() + kEthernetHeaderLen);
  return out;
}

std::uint16_t ipv4_checksum(ByteView header_bytes) {
  if (header_bytes.size() != kIpv4HeaderLen) {
    throw Error(ErrorCode::WrongLength, std::to_string(header_bytes.size()) + " bytes");
  }
  std::uint32_t sum = 0;
  for (std::size_t i = 0; i < kIpv4HeaderLen; i += 2) sum += load_be16(header_bytes.data() + i);
  while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
  return static_cast<std::uint16_t>(~sum);
}

bool ipv4_checksum_valid(ByteView header_bytes) { return ipv4_checksum(header_bytes) == 0; }

FramedPlaintext esp_frame(ByteView plaintext, std::size_t icv_len) {
  FramedPlaintext out;
  std::size_t pad = esp_pad_length(plaintext.size());
  out.bytes.reserve(plaintext.size() + pad + 2);
  out.bytes.assign(plaintext.begin(), plaintext.end());
  for (std::size_t i = 1; i <= pad; ++i) {
    out.bytes.push_back(static_cast<std::uint8_t>(i));
    out.trailer.padding.push_back(static_cast<std::uint8_t>(i));
  }
  out.trailer.pad_length = static_cast<std::uint8_t>(pad);
  out.trailer.next_header = kProtoIpInIp;
  out.trailer.icv.assign(icv_len, 0);
  out.bytes.push_back(out.trailer.pad_length);
  out.bytes.push_back(out.trailer.next_header);
  return out;
}

Bytes esp_unframe(ByteView framed) {
  if (framed.size() < 2 || framed.size() % 4 != 0) {
    throw Error(ErrorCode::BadPadding, "framed length " + std::to_string(framed.size()));
  }
  std::uint8_t next_header = framed[framed.size() - 1];
  std::uint8_t pad = framed[framed.size() - 2];
  if (next_header != kProtoIpInIp) {
    throw Error(ErrorCode::BadNextHeader, "next header " + std::to_string(next_header));
  }
  if (pad + 2u > framed.size()) throw Error(ErrorCode::BadPadding, "pad length exceeds payload");
  std::size_t plain_len = framed.size() - 2 - pad;
  if (esp_pad_length(plain_len) != pad) {
    throw Error(ErrorCode::BadPadding, "pad length inconsistent with alignment");
  }
  for (std::size_t i = 0; i < pad; ++i) {
    if (framed[plain_len + i] != i + 1) throw Error(ErrorCode::BadPadding, "non-monotone padding");
  }
  return Bytes(framed.begin(), framed.begin() + static_cast<std::ptrdiff_t>(plain_len));
}

std::vector<Bytes> read_hex_frames(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  std::vector<Bytes> frames;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    frames.push_back(from_hex(line));
  }
  return frames;
}

void write_hex_frames(const std::string& path, const std::vector<Bytes>& frames) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write " + path);
  for (const auto& f : frames) out << to_hex(f) << '\n';
}

}  // namespace espnet
