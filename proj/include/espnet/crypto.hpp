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
#include <cstdint>
#include <optional>
#include <string_view>

#include "espnet/common.hpp"
#include "espnet/packet.hpp"
#include "espnet/random.hpp"

namespace espnet {

enum class CipherSuite : std::uint8_t { Null = 0, AesCtrHmacMd5 = 1 };

std::string_view to_string(CipherSuite suite);
CipherSuite parse_cipher_suite(std::string_view text);

inline constexpr std::size_t kAesKeyLen = 16;
inline constexpr std::size_t kCtrNonceLen = 4;
inline constexpr std::size_t kHmacKeyLen = 16;
inline constexpr std::size_t kExplicitIvLen = 8;
inline constexpr std::size_t kIcvLen = 12;

struct SaKeys {
  std::array<std::uint8_t, kAesKeyLen> aes_key{};
  std::array<std::uint8_t, kCtrNonceLen> ctr_nonce{};
  std::array<std::uint8_t, kHmacKeyLen> hmac_key{};
  bool operator==(const SaKeys&) const = default;
};

/// Empty for the NULL suite.
using SaKeyMaterial = std::optional<SaKeys>;

struct SecurityAssociation {
  std::uint32_t spi = 0;
  Ipv4Addr tunnel_src;
  Ipv4Addr tunnel_dst;
  CipherSuite suite = CipherSuite::Null;
  SaKeyMaterial keys;
  std::uint32_t register_index = 0;
  std::uint64_t soft_limit = 0;
  std::uint64_t hard_limit = 0;
  bool operator==(const SecurityAssociation&) const = default;
};

/// Throws InvariantViolation when spi < 256, soft >= hard, or the key
/// material does not match the suite.
void validate(const SecurityAssociation& sa);

struct EspCiphertext {
  Bytes iv;    // 8 bytes for the AES suite, empty for NULL
  Bytes body;  // framed plaintext (NULL) or its AES-CTR encryption
  Bytes icv;   // 12 bytes for the AES suite, empty for NULL
  bool operator==(const EspCiphertext&) const = default;
};

std::size_t icv_length(CipherSuite suite);
std::size_t iv_length(CipherSuite suite);

/// Wire body following the ESP header: iv || body || icv.
Bytes to_wire(const EspCiphertext& ct);
EspCiphertext ciphertext_from_wire(CipherSuite suite, ByteView esp_body);

/// Builds the ESP header for a 64-bit SA packet counter. Throws
/// SequenceOverflow when the counter is 0 or does not fit 32 bits.
EspHeader make_esp_header(std::uint32_t spi, std::uint64_t counter);

EspCiphertext suite_encapsulate(const SecurityAssociation& sa, const EspHeader& esp, ByteView inner_ip);

/// Verifies the ICV (constant time) before any decryption, then strips and
/// validates the framing. Throws IcvMismatch, BadPadding, BadNextHeader,
/// MalformedCiphertext or SpiMismatch.
Bytes suite_decapsulate(const SecurityAssociation& sa, const EspHeader& esp, const EspCiphertext& ct);

SaKeyMaterial generate_key_material(CipherSuite suite, RandomSource& rng);

// Tunnel-mode helpers shared by the switch ESP blocks and the host stack.
struct EspTunnelPacket {
  Ipv4Header outer;
  EspHeader esp;
  Bytes body;  // iv || ciphertext || icv
};

inline constexpr std::uint8_t kOuterTtl = 64;

/// Wraps a complete inner IPv4 datagram for the SA packet counter value.
EspTunnelPacket esp_tunnel_encapsulate(const SecurityAssociation& sa, std::uint64_t counter, ByteView inner_ip);

/// Returns the inner IPv4 datagram.
Bytes esp_tunnel_decapsulate(const SecurityAssociation& sa, const EspHeader& esp, ByteView esp_body);

/// Work units charged by the cost model for one encapsulation or
/// decapsulation with a framed payload of the given size.
std::uint64_t esp_work_units(CipherSuite suite, std::size_t framed_len);

/// RFC 3686 counter block: nonce || iv || block counter (big endian, from 1).
std::array<std::uint8_t, 16> ctr_counter_block(std::span<const std::uint8_t, kCtrNonceLen> nonce,
                                               std::span<const std::uint8_t, kExplicitIvLen> iv,
                                               std::uint32_t block_counter);

/// AES-128-CTR per RFC 3686 (encryption and decryption are the same).
Bytes aes128_ctr(std::span<const std::uint8_t, kAesKeyLen> key,
                 std::span<const std::uint8_t, kCtrNonceLen> nonce,
                 std::span<const std::uint8_t, kExplicitIvLen> iv, ByteView data);

/// Full 16-byte HMAC-MD5.
std::array<std::uint8_t, 16> hmac_md5(ByteView key, ByteView data);


}  // namespace espnet
