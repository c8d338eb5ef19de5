// Copyright 2026 The eapsh Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "eapsh/random.hpp"

#include <openssl/rand.h>

#include "eapsh/error.hpp"

namespace eapsh {

std::uint32_t RandomSource::uniform(std::uint32_t lo, std::uint32_t hi) {
  const std::uint64_t span = std::uint64_t{hi} - lo + 1;
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = (std::uint64_t{1} << 32) / span * span;
  for (;;) {
    std::uint8_t raw[4];
    fill(raw);
    std::uint64_t v = (std::uint64_t{raw[0]} << 24) | (raw[1] << 16) |
                      (raw[2] << 8) | raw[3];
    if (v < limit) return static_cast<std::uint32_t>(lo + v % span);
  }
}

void SystemRandom::fill(std::span<std::uint8_t> out) {
  if (out.empty()) return;
  if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) {
    throw Error(Errc::IoError, "RAND_bytes failed");
  }
}

void SeededRandom::fill(std::span<std::uint8_t> out) {
  std::lock_guard lock(mu_);
  std::size_t i = 0;
  while (i < out.size()) {
    std::uint64_t v = engine_();
    for (int k = 0; k < 8 && i < out.size(); ++k, ++i) {
      out[i] = static_cast<std::uint8_t>(v >> (8 * k));
    }
  }
}

RandomSource& system_random() {
  static SystemRandom rng;
  return rng;
}

}  // namespace eapsh
