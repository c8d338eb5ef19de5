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

#include <stdexcept>
#include <string>
#include <string_view>

namespace eapsh {

enum class Errc {
  // codec
  InvariantViolation,
  Oversize,
  Truncated,
  BadType,
  ReservedBitsSet,
  LengthMismatch,
  FlagMismatch,
  Overflow,
  // tunnel
  ConfigError,
  NotEstablished,
  IntegrityFailure,
  HandshakeFailed,
  StatusUnavailable,
  // pki
  BadKeySize,
  BadName,
  Malformed,
  BadSelfSignature,
  UnknownAuthority,
  Expired,
  NotYetValid,
  // pseudonym
  BadIdentity,
  BadEncoding,
  BadPadding,
  // state machines
  ProtocolViolation,
  NoPortAvailable,
  MalformedHttp,
  KeyGenFailure,
  CertMismatch,
  PersistFailure,
  PortalUnreachable,
  MalformedResponse,
  StalePseudonym,
  BadCsr,
  Timeout,
  // portal, harness
  StoreCorrupt,
  FixtureError,
  PortInUse,
  IoError,
  UsageError,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code) {}
  explicit Error(Errc code)
      : std::runtime_error(std::string(to_string(code))), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace eapsh
