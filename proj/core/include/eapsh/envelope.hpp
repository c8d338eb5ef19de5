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

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "eapsh/auth_server.hpp"
#include "eapsh/bytes.hpp"

namespace eapsh {

// Authenticator <-> AS message, standing in for RADIUS:
//
//   type (1) | session id (4, big-endian) | payload length (4) | payload
//
// Accept carries the 64-byte MSK followed by the EAP Success packet.
enum class EnvelopeType : std::uint8_t {
  Eap = 1,
  Accept = 2,
  Reject = 3,
  Start = 4,
};

struct Envelope {
  EnvelopeType type = EnvelopeType::Eap;
  std::uint32_t session = 0;
  Bytes payload;

  bool operator==(const Envelope&) const = default;
};

inline constexpr std::size_t kEnvelopeHeaderSize = 9;

Bytes encode_envelope(const Envelope& envelope);
// Throws Error(Malformed).
Envelope decode_envelope(ByteView bytes);

Envelope make_accept(std::uint32_t session, const Msk& msk, ByteView eap_success);
// Splits an Accept payload. Throws Error(Malformed).
std::pair<Msk, Bytes> split_accept(const Envelope& accept);

// AS side of the authenticator link: one AsSession per envelope session id.
class AsDispatcher {
 public:
  explicit AsDispatcher(AuthServer& server) : server_(server) {}

  // Start opens a session; Eap steps it. Unknown sessions get a Reject.
  std::vector<Envelope> handle(const Envelope& in);

  std::optional<AsDecision> decision(std::uint32_t session) const;
  std::string fallback_reason(std::uint32_t session) const;
  std::size_t active_sessions() const;
  // Drops sessions idle past the inactivity timeout; returns how many.
  std::size_t sweep(SystemTime now);

 private:
  struct Entry {
    std::unique_ptr<AsSession> session;
    std::optional<AsDecision> decision;
    std::string fallback_reason;
  };

  AuthServer& server_;
  mutable std::mutex mu_;
  std::map<std::uint32_t, Entry> sessions_;
};

}  // namespace eapsh
