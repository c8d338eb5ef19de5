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

#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>

#include "eapsh/bytes.hpp"
#include "eapsh/clock.hpp"
#include "eapsh/random.hpp"

namespace eapsh {

inline constexpr std::size_t kPseudonymIvSize = 16;
inline constexpr std::size_t kPseudonymMacSize = 20;
inline constexpr std::size_t kMaxIdentityLength = 255;
inline constexpr Seconds kPseudonymFreshness{60};

using PseudonymIv = std::array<std::uint8_t, kPseudonymIvSize>;

// Volatile AS secret; one key encrypts identities and authenticates the
// result. Never written to disk: a restarted AS cannot resolve old names.
struct PseudonymKey {
  std::array<std::uint8_t, 16> k{};

  static PseudonymKey generate(RandomSource& rng = system_random());
  bool operator==(const PseudonymKey&) const = default;
};

struct Pseudonym {
  std::string text;  // Base64(IV || c || HMAC-SHA1(K, IV || c))

  bool operator==(const Pseudonym&) const = default;
};

// c = AES-128-CBC(K, IV, identity || PKCS#7). Throws Error(BadIdentity) for
// empty identities or ones longer than 255 bytes.
Pseudonym generate_pseudonym(std::string_view identity, const PseudonymKey& key,
                             const PseudonymIv& iv);
Pseudonym generate_pseudonym(std::string_view identity, const PseudonymKey& key,
                             RandomSource& rng = system_random());

// Throws Error(BadEncoding), Error(IntegrityFailure) or Error(BadPadding).
std::string resolve_pseudonym(const Pseudonym& pseudonym, const PseudonymKey& key);

// Short-lived record of pseudonyms handed out after a portal login. A CSR is
// only honored for a name that is still here; taking it consumes it.
class PseudonymCache {
 public:
  void insert(const Pseudonym& pseudonym, SystemTime now);
  bool take_fresh(std::string_view common_name, SystemTime now,
                  Seconds window = kPseudonymFreshness);
  std::size_t size() const;
  void clear();

 private:
  mutable std::mutex mu_;
  std::unordered_map<std::string, SystemTime> entries_;
};

}  // namespace eapsh
