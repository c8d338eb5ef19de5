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

#include "eapsh/error.hpp"

namespace eapsh {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::InvariantViolation: return "InvariantViolation";
    case Errc::Oversize: return "Oversize";
    case Errc::Truncated: return "Truncated";
    case Errc::BadType: return "BadType";
    case Errc::ReservedBitsSet: return "ReservedBitsSet";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::FlagMismatch: return "FlagMismatch";
    case Errc::Overflow: return "Overflow";
    case Errc::ConfigError: return "ConfigError";
    case Errc::NotEstablished: return "NotEstablished";
    case Errc::IntegrityFailure: return "IntegrityFailure";
    case Errc::HandshakeFailed: return "HandshakeFailed";
    case Errc::StatusUnavailable: return "StatusUnavailable";
    case Errc::BadKeySize: return "BadKeySize";
    case Errc::BadName: return "BadName";
    case Errc::Malformed: return "Malformed";
    case Errc::BadSelfSignature: return "BadSelfSignature";
    case Errc::UnknownAuthority: return "UnknownAuthority";
    case Errc::Expired: return "Expired";
    case Errc::NotYetValid: return "NotYetValid";
    case Errc::BadIdentity: return "BadIdentity";
    case Errc::BadEncoding: return "BadEncoding";
    case Errc::BadPadding: return "BadPadding";
    case Errc::ProtocolViolation: return "ProtocolViolation";
    case Errc::NoPortAvailable: return "NoPortAvailable";
    case Errc::MalformedHttp: return "MalformedHttp";
    case Errc::KeyGenFailure: return "KeyGenFailure";
    case Errc::CertMismatch: return "CertMismatch";
    case Errc::PersistFailure: return "PersistFailure";
    case Errc::PortalUnreachable: return "PortalUnreachable";
    case Errc::MalformedResponse: return "MalformedResponse";
    case Errc::StalePseudonym: return "StalePseudonym";
    case Errc::BadCsr: return "BadCsr";
    case Errc::Timeout: return "Timeout";
    case Errc::StoreCorrupt: return "StoreCorrupt";
    case Errc::FixtureError: return "FixtureError";
    case Errc::PortInUse: return "PortInUse";
    case Errc::IoError: return "IoError";
    case Errc::UsageError: return "UsageError";
  }
  return "Unknown";
}

}  // namespace eapsh
