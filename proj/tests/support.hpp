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

// Shared helpers for the unit tests.

#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "espnet/common.hpp"
#include "espnet/packet.hpp"

namespace espnet::testing {

inline Bytes random_bytes(std::mt19937_64& rng, std::size_t n) {
  Bytes out(n);
  for (auto& b : out) b = static_cast<std::uint8_t>(rng());
  return out;
}

inline Ipv4Addr random_ip(std::mt19937_64& rng) { return Ipv4Addr{static_cast<std::uint32_t>(rng())}; }
inline Ipv4Addr ip(const char* text) { return Ipv4Addr::parse(text); }
inline Ipv4Prefix prefix(const char* text) { return Ipv4Prefix::parse(text); }
inline MacAddr mac(const char* text) { return MacAddr::parse(text); }

/// Plain IPv4 datagram carrying `payload`.
inline Bytes make_datagram(Ipv4Addr src, Ipv4Addr dst, ByteView payload, std::uint8_t protocol = 17,
                           std::uint8_t ttl = 64) {
  Ipv4Header h;
  h.src = src;
  h.dst = dst;
  h.protocol = protocol;
  h.ttl = ttl;
  return serialize_ipv4(h, std::nullopt, payload);
}

/// Ethernet frame around a datagram.
inline Bytes make_frame(const MacAddr& dst, const MacAddr& src, ByteView datagram) {
  Bytes out(kEthernetHeaderLen);
  std::copy(dst.octets.begin(), dst.octets.end(), out.begin());
  std::copy(src.octets.begin(), src.octets.end(), out.begin() + 6);
  store_be16(out.data() + 12, kEthertypeIpv4);
  out.insert(out.end(), datagram.begin(), datagram.end());
  return out;
}

}  // namespace espnet::testing
