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

// Self-contained AES-128 (FIPS-197) block cipher and RFC 3686 counter mode,
// written from the standard without any library support. Test use only.

#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace espnet::oracle {

using Block = std::array<std::uint8_t, 16>;

inline std::uint8_t xtime(std::uint8_t a) {
  return static_cast<std::uint8_t>((a << 1) ^ ((a & 0x80) ? 0x1b : 0x00));
}

inline std::uint8_t gf_mul(std::uint8_t a, std::uint8_t b) {
  std::uint8_t r = 0;
  while (b != 0) {
    if (b & 1) r ^= a;
    a = xtime(a);
    b >>= 1;
  }
  return r;
}

// S-box from the multiplicative inverse in GF(2^8) and the affine map.
inline const std::array<std::uint8_t, 256>& sbox() {
  static const std::array<std::uint8_t, 256> table = [] {
    std::array<std::uint8_t, 256> t{};
    for (int x = 0; x < 256; ++x) {
      std::uint8_t inv = 0;
      if (x != 0) {
        for (int y = 1; y < 256; ++y) {
          if (gf_mul(static_cast<std::uint8_t>(x), static_cast<std::uint8_t>(y)) == 1) {
            inv = static_cast<std::uint8_t>(y);
            break;
          }
        }
      }
      std::uint8_t s = 0x63;
      for (int bit = 0; bit < 8; ++bit) {
        int v = ((inv >> bit) ^ (inv >> ((bit + 4) % 8)) ^ (inv >> ((bit + 5) % 8)) ^ (inv >> ((bit + 6) % 8)) ^
                 (inv >> ((bit + 7) % 8))) & 1;
        s ^= static_cast<std::uint8_t>(v << bit);
      }
      t[static_cast<std::size_t>(x)] = s;
    }
    return t;
  }();
  return table;
}

inline std::array<Block, 11> expand_key(const Block& key) {
  std::array<std::uint8_t, 176> w{};
  std::copy(key.begin(), key.end(), w.begin());
  std::uint8_t rcon = 1;
  for (std::size_t i = 16; i < 176; i += 4) {
    std::array<std::uint8_t, 4> t{w[i - 4], w[i - 3], w[i - 2], w[i - 1]};
    if (i % 16 == 0) {
      t = {static_cast<std::uint8_t>(sbox()[t[1]] ^ rcon), sbox()[t[2]], sbox()[t[3]], sbox()[t[0]]};
      rcon = xtime(rcon);
    }
    for (std::size_t k = 0; k < 4; ++k) w[i + k] = static_cast<std::uint8_t>(w[i - 16 + k] ^ t[k]);
  }
  std::array<Block, 11> rounds{};
  for (std::size_t r = 0; r < 11; ++r) std::copy(w.begin() + r * 16, w.begin() + r * 16 + 16, rounds[r].begin());
  return rounds;
}

// State is column-major: byte (row, col) lives at index 4 * col + row.
inline Block encrypt_block(const Block& key, const Block& in) {
  auto rk = expand_key(key);
  Block s = in;
  auto add_round_key = [&](std::size_t r) {
    for (std::size_t i = 0; i < 16; ++i) s[i] ^= rk[r][i];
  };
  auto sub_shift = [&] {
    Block t{};
    for (std::size_t col = 0; col < 4; ++col) {
      for (std::size_t row = 0; row < 4; ++row) t[4 * col + row] = sbox()[s[4 * ((col + row) % 4) + row]];
    }
    s = t;
  };
  auto mix_columns = [&] {
    for (std::size_t col = 0; col < 4; ++col) {
      std::uint8_t* c = &s[4 * col];
      std::uint8_t a0 = c[0], a1 = c[1], a2 = c[2], a3 = c[3];
      c[0] = static_cast<std::uint8_t>(gf_mul(a0, 2) ^ gf_mul(a1, 3) ^ a2 ^ a3);
      c[1] = static_cast<std::uint8_t>(a0 ^ gf_mul(a1, 2) ^ gf_mul(a2, 3) ^ a3);
      c[2] = static_cast<std::uint8_t>(a0 ^ a1 ^ gf_mul(a2, 2) ^ gf_mul(a3, 3));
      c[3] = static_cast<std::uint8_t>(gf_mul(a0, 3) ^ a1 ^ a2 ^ gf_mul(a3, 2));
    }
  };
  add_round_key(0);
  for (std::size_t r = 1; r < 10; ++r) {
    sub_shift();
    mix_columns();
    add_round_key(r);
  }
  sub_shift();
  add_round_key(10);
  return s;
}

/// RFC 3686: keystream block i is AES(key, nonce || iv || BE32(i + 1)).
inline std::vector<std::uint8_t> ctr(const Block& key, const std::array<std::uint8_t, 4>& nonce,
                                     const std::array<std::uint8_t, 8>& iv, const std::vector<std::uint8_t>& data) {
  std::vector<std::uint8_t> out(data.size());
  for (std::size_t off = 0; off < data.size(); off += 16) {
    std::uint32_t counter = static_cast<std::uint32_t>(off / 16 + 1);
    Block cb{};
    std::copy(nonce.begin(), nonce.end(), cb.begin());
    std::copy(iv.begin(), iv.end(), cb.begin() + 4);
    cb[12] = static_cast<std::uint8_t>(counter >> 24);
    cb[13] = static_cast<std::uint8_t>(counter >> 16);
    cb[14] = static_cast<std::uint8_t>(counter >> 8);
    cb[15] = static_cast<std::uint8_t>(counter);
    Block ks = encrypt_block(key, cb);
    for (std::size_t i = off; i < std::min(off + 16, data.size()); ++i) out[i] = data[i] ^ ks[i - off];
  }
  return out;
}

}  // namespace espnet::oracle
