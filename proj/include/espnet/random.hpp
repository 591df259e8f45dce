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
#include <span>

namespace espnet {

/// Source of key material and SPIs. Implementations are not thread-safe;
/// each caller owns its instance.
class RandomSource {
 public:
  virtual ~RandomSource() = default;
  virtual void fill(std::span<std::uint8_t> out) = 0;

  std::uint32_t next_u32();
  std::uint64_t next_u64();
};

/// AES-128-CTR keystream generator keyed by SHA-256(seed). Reproducible for
/// a fixed seed, which the simulator relies on.
class SeededRandom final : public RandomSource {
 public:
  explicit SeededRandom(std::uint64_t seed);
  void fill(std::span<std::uint8_t> out) override;

 private:
  std::array<std::uint8_t, 16> key_{};
  std::array<std::uint8_t, 16> counter_{};
  std::array<std::uint8_t, 16> block_{};
  std::size_t block_used_ = 16;
};

/// Operating-system entropy via OpenSSL RAND_bytes.
class SystemRandom final : public RandomSource {
 public:
  void fill(std::span<std::uint8_t> out) override;
};

}  // namespace espnet
