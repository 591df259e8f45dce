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

#include "espnet/crypto.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <algorithm>
#include <memory>

namespace espnet {

namespace {

struct CipherCtxDeleter {
  void operator()(EVP_CIPHER_CTX* ctx) const { EVP_CIPHER_CTX_free(ctx); }
};
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;

std::array<std::uint8_t, kExplicitIvLen> iv_from_seq(std::uint32_t seq) {
  std::array<std::uint8_t, kExplicitIvLen> iv{};
  store_be32(iv.data() + 4, seq);
  return iv;
}

Bytes esp_header_bytes(const EspHeader& esp) {
  Bytes out(kEspHeaderLen);
  store_be32(out.data(), esp.spi);
  store_be32(out.data() + 4, esp.seq);
  return out;
}

// ICV input: ESP header || iv || ciphertext body.
std::array<std::uint8_t, kIcvLen> compute_icv(const SaKeys& keys, const EspHeader& esp, ByteView iv,
                                               ByteView body) {
  Bytes input = esp_header_bytes(esp);
  input.insert(input.end(), iv.begin(), iv.end());
  input.insert(input.end(), body.begin(), body.end());
  auto mac = hmac_md5(keys.hmac_key, input);
  std::array<std::uint8_t, kIcvLen> icv{};
  std::copy_n(mac.begin(), kIcvLen, icv.begin());
  return icv;
}

const SaKeys& require_keys(const SecurityAssociation& sa) {
  if (!sa.keys) throw Error(ErrorCode::InvariantViolation, "AES suite SA without key material");
  return *sa.keys;
}

}  // namespace

std::string_view to_string(CipherSuite suite) {
  switch (suite) {
    case CipherSuite::Null: return "NULL";
    case CipherSuite::AesCtrHmacMd5: return "AES_CTR_HMAC_MD5";
  }
  return "?";
}

CipherSuite parse_cipher_suite(std::string_view text) {
  if (text == "NULL") return CipherSuite::Null;
  if (text == "AES_CTR_HMAC_MD5") return CipherSuite::AesCtrHmacMd5;
  throw Error(ErrorCode::ParseError, "unknown cipher suite '" + std::string(text) + "'");
}

void validate(const SecurityAssociation& sa) {
  if (sa.spi < kMinSpi) throw Error(ErrorCode::InvariantViolation, "SPI below 256");
  if (sa.soft_limit >= sa.hard_limit) {
    throw Error(ErrorCode::InvariantViolation, "soft limit must be below hard limit");
  }
  if (sa.keys.has_value() != (sa.suite == CipherSuite::AesCtrHmacMd5)) {
    throw Error(ErrorCode::InvariantViolation, "key material does not match cipher suite");
  }
}

std::size_t icv_length(CipherSuite suite) { return suite == CipherSuite::Null ? 0 : kIcvLen; }
std::size_t iv_length(CipherSuite suite) { return suite == CipherSuite::Null ? 0 : kExplicitIvLen; }

Bytes to_wire(const EspCiphertext& ct) {
  Bytes out;
  out.reserve(ct.iv.size() + ct.body.size() + ct.icv.size());
  out.insert(out.end(), ct.iv.begin(), ct.iv.end());
  out.insert(out.end(), ct.body.begin(), ct.body.end());
  out.insert(out.end(), ct.icv.begin(), ct.icv.end());
  return out;
}

EspCiphertext ciphertext_from_wire(CipherSuite suite, ByteView esp_body) {
  std::size_t iv_len = iv_length(suite);
  std::size_t icv_len = icv_length(suite);
  if (esp_body.size() < iv_len + icv_len + 2) {
    throw Error(ErrorCode::MalformedCiphertext, "ESP body too short for suite");
  }
  EspCiphertext ct;
  ct.iv.assign(esp_body.begin(), esp_body.begin() + static_cast<std::ptrdiff_t>(iv_len));
  ct.body.assign(esp_body.begin() + static_cast<std::ptrdiff_t>(iv_len),
                 esp_body.end() - static_cast<std::ptrdiff_t>(icv_len));
  ct.icv.assign(esp_body.end() - static_cast<std::ptrdiff_t>(icv_len), esp_body.end());
  return ct;
}

EspHeader make_esp_header(std::uint32_t spi, std::uint64_t counter) {
  if (counter == 0 || counter > 0xffffffffULL) {
    throw Error(ErrorCode::SequenceOverflow, "packet counter " + std::to_string(counter));
  }
  return EspHeader{spi, static_cast<std::uint32_t>(counter)};
}

EspCiphertext suite_encapsulate(const SecurityAssociation& sa, const EspHeader& esp, ByteView inner_ip) {
  if (esp.spi != sa.spi) throw Error(ErrorCode::SpiMismatch, "ESP header SPI differs from SA");
  if (esp.seq == 0) throw Error(ErrorCode::SequenceOverflow, "sequence number wrapped to 0");

  EspCiphertext ct;
  FramedPlaintext framed = esp_frame(inner_ip, icv_length(sa.suite));
  if (sa.suite == CipherSuite::Null) {
    ct.body = std::move(framed.bytes);
    return ct;
  }
  const SaKeys& keys = require_keys(sa);
  auto iv = iv_from_seq(esp.seq);
  ct.iv.assign(iv.begin(), iv.end());
  ct.body = aes128_ctr(keys.aes_key, keys.ctr_nonce, iv, framed.bytes);
  auto icv = compute_icv(keys, esp, ct.iv, ct.body);
  ct.icv.assign(icv.begin(), icv.end());
  return ct;
}

Bytes suite_decapsulate(const SecurityAssociation& sa, const EspHeader& esp, const EspCiphertext& ct) {
  if (esp.spi != sa.spi) throw Error(ErrorCode::SpiMismatch, "ESP header SPI differs from SA");
  if (ct.iv.size() != iv_length(sa.suite) || ct.icv.size() != icv_length(sa.suite)) {
    throw Error(ErrorCode::MalformedCiphertext, "iv/icv length does not match suite");
  }
  if (sa.suite == CipherSuite::Null) return esp_unframe(ct.body);

  const SaKeys& keys = require_keys(sa);
  auto expected = compute_icv(keys, esp, ct.iv, ct.body);
  if (CRYPTO_memcmp(expected.data(), ct.icv.data(), kIcvLen) != 0) {
    throw Error(ErrorCode::IcvMismatch, "spi " + std::to_string(esp.spi) + " seq " + std::to_string(esp.seq));
  }
  std::span<const std::uint8_t, kExplicitIvLen> iv(ct.iv.data(), kExplicitIvLen);
  Bytes framed = aes128_ctr(keys.aes_key, keys.ctr_nonce, iv, ct.body);
  return esp_unframe(framed);
}

SaKeyMaterial generate_key_material(CipherSuite suite, RandomSource& rng) {
  if (suite == CipherSuite::Null) return std::nullopt;
  SaKeys keys;
  rng.fill(keys.aes_key);
  rng.fill(keys.ctr_nonce);
  rng.fill(keys.hmac_key);
  return keys;
}

EspTunnelPacket esp_tunnel_encapsulate(const SecurityAssociation& sa, std::uint64_t counter, ByteView inner_ip) {
  EspTunnelPacket out;
  out.esp = make_esp_header(sa.spi, counter);
  out.body = to_wire(suite_encapsulate(sa, out.esp, inner_ip));
  out.outer.ttl = kOuterTtl;
  out.outer.protocol = kProtoEsp;
  out.outer.src = sa.tunnel_src;
  out.outer.dst = sa.tunnel_dst;
  out.outer.total_length = static_cast<std::uint16_t>(kIpv4HeaderLen + kEspHeaderLen + out.body.size());
  return out;
}

Bytes esp_tunnel_decapsulate(const SecurityAssociation& sa, const EspHeader& esp, ByteView esp_body) {
  return suite_decapsulate(sa, esp, ciphertext_from_wire(sa.suite, esp_body));
}

std::uint64_t esp_work_units(CipherSuite suite, std::size_t framed_len) {
  // One unit per 64 bytes of framing copy; AES adds one unit per 16-byte
  // block and HMAC-MD5 one per 64-byte compression (ipad block, ESP
  // header, iv, padding and the two-block outer hash included).
  std::uint64_t units = (framed_len + 63) / 64;
  if (suite == CipherSuite::AesCtrHmacMd5) {
    std::size_t mac_input = kEspHeaderLen + kExplicitIvLen + framed_len;
    units += (framed_len + 15) / 16 + (64 + mac_input + 9 + 63) / 64 + 2;
  }
  return units;
}

std::array<std::uint8_t, 16> ctr_counter_block(std::span<const std::uint8_t, kCtrNonceLen> nonce,
                                               std::span<const std::uint8_t, kExplicitIvLen> iv,
                                               std::uint32_t block_counter) {
  std::array<std::uint8_t, 16> block{};
  std::copy(nonce.begin(), nonce.end(), block.begin());
  std::copy(iv.begin(), iv.end(), block.begin() + kCtrNonceLen);
  store_be32(block.data() + 12, block_counter);
  return block;
}

Bytes aes128_ctr(std::span<const std::uint8_t, kAesKeyLen> key,
                 std::span<const std::uint8_t, kCtrNonceLen> nonce,
                 std::span<const std::uint8_t, kExplicitIvLen> iv, ByteView data) {
  // OpenSSL's CTR mode increments the full 128-bit block; with the counter
  // starting at 1 and payloads far below 2^32 blocks this equals RFC 3686.
  auto initial = ctr_counter_block(nonce, iv, 1);
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  Bytes out(data.size());
  int len = 0;
  int final_len = 0;
  if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_128_ctr(), nullptr, key.data(), initial.data()) != 1 ||
      EVP_EncryptUpdate(ctx.get(), out.data(), &len, data.data(), static_cast<int>(data.size())) != 1 ||
      EVP_EncryptFinal_ex(ctx.get(), out.data() + len, &final_len) != 1) {
    throw std::runtime_error("AES-128-CTR failed");
  }
  return out;
}

std::array<std::uint8_t, 16> hmac_md5(ByteView key, ByteView data) {
  std::array<std::uint8_t, 16> mac{};
  unsigned int len = 0;
  if (HMAC(EVP_md5(), key.data(), static_cast<int>(key.size()), data.data(), data.size(), mac.data(), &len) ==
          nullptr ||
      len != mac.size()) {
    throw std::runtime_error("HMAC-MD5 failed");
  }
  return mac;
}

}  // namespace espnet
