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

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "eapsh/bytes.hpp"
#include "eapsh/clock.hpp"
#include "eapsh/pki.hpp"

namespace eapsh {

inline constexpr std::size_t kMskSize = 64;
inline constexpr const char* kMskExporterLabel = "client EAP encryption";

using Msk = std::array<std::uint8_t, kMskSize>;

// ---- stapled revocation status ----

enum class CertStatus { Good, Revoked, Unknown };

struct StapledStatus {
  Bytes der;  // a DER OCSPResponse bound to the server's leaf certificate
};

// Answers revocation queries for the server's own chain. Implementations
// must tolerate concurrent calls. Throws Error(StatusUnavailable).
class StatusProvider {
 public:
  virtual ~StatusProvider() = default;
  virtual StapledStatus staple(const std::vector<Certificate>& chain) = 0;
};

// Desk-scale responder: signs an OCSP response with the issuing CA key,
// answering a fixed status with a one-hour validity window.
class StubStatusProvider final : public StatusProvider {
 public:
  StubStatusProvider(Certificate issuer, KeyPair issuer_key, const Clock& clock,
                     CertStatus answer = CertStatus::Good);
  StapledStatus staple(const std::vector<Certificate>& chain) override;

 private:
  Certificate issuer_;
  KeyPair issuer_key_;
  const Clock& clock_;
  CertStatus answer_;
};

StapledStatus staple_status(StatusProvider& provider, const std::vector<Certificate>& chain);

// Checks a stapled response against the leaf, its issuer, the anchors, and
// the clock. Returns the certificate status; throws Error(StatusUnavailable)
// when the response is unusable.
CertStatus check_stapled_status(ByteView der, const Certificate& leaf,
                                const std::vector<Certificate>& chain,
                                const std::vector<Certificate>& anchors, SystemTime now);

// ---- tunnel ----

enum class TunnelRole { Client, Server };
enum class ClientAuth { NotOffered, Offered, Requested };
enum class TunnelState { Handshaking, Established, Failed };

enum class FailureReason {
  None,
  UnknownAuthority,
  Expired,
  StatusMissing,
  StatusRevoked,
  StatusInvalid,
  Protocol,
  ResumptionAttempted,
};

const char* to_string(FailureReason r);

struct TunnelEvent {
  enum class Kind { Established, PeerUnauthenticated, HandshakeFailed };
  Kind kind;
  FailureReason reason = FailureReason::None;
  std::string detail;
};

struct DriveResult {
  Bytes outbound;
  std::vector<TunnelEvent> events;

  bool has(TunnelEvent::Kind k) const;
};

struct TunnelConfig {
  TunnelRole role = TunnelRole::Client;
  std::vector<Certificate> trust_anchors;
  std::vector<Certificate> own_chain;  // leaf first
  std::optional<KeyPair> own_key;
  ClientAuth client_auth = ClientAuth::NotOffered;
  bool require_stapled_status = true;
  bool allow_resumption = false;
  std::shared_ptr<StatusProvider> status_provider;  // server side, optional
  const Clock* clock = nullptr;                    // defaults to system clock

  // Throws Error(ConfigError) if the invariants do not hold.
  void validate() const;
};

// The handshake machinery behind a TunnelSession. The production engine is
// OpenSSL over memory BIOs; tests may plug a scripted one.
class HandshakeEngine {
 public:
  virtual ~HandshakeEngine() = default;

  virtual Bytes start() = 0;
  virtual DriveResult drive(ByteView inbound) = 0;
  virtual Bytes seal(ByteView plaintext) = 0;
  virtual Bytes open(ByteView records) = 0;
  virtual Msk export_keying_material() = 0;
  virtual std::optional<Certificate> peer_certificate() const = 0;
  virtual bool peer_authenticated() const = 0;
  virtual bool resumed() const = 0;
};

using EngineFactory = std::function<std::unique_ptr<HandshakeEngine>(const TunnelConfig&)>;

std::unique_ptr<HandshakeEngine> make_openssl_engine(const TunnelConfig& config);

class TunnelSession {
 public:
  // Returns the session and the records to send first (empty for servers).
  // Throws Error(ConfigError).
  static std::pair<TunnelSession, Bytes> start(const TunnelConfig& config,
                                               const EngineFactory& factory = {});

  // Pre: Handshaking. Failures are reported as events and move the session
  // to Failed; a Server never fails over the client's certificate.
  DriveResult drive(ByteView inbound);

  // Pre: Established. Throws Error(NotEstablished) / Error(IntegrityFailure).
  Bytes seal(ByteView plaintext);
  Bytes open(ByteView records);
  Msk export_msk() const;

  TunnelState state() const { return state_; }
  TunnelRole role() const { return role_; }
  const std::optional<Certificate>& peer_certificate() const { return peer_certificate_; }
  bool client_authenticated() const { return client_authenticated_; }
  const std::optional<Msk>& msk() const { return msk_; }
  FailureReason failure_reason() const { return failure_; }

  TunnelSession(TunnelSession&&) noexcept;
  TunnelSession& operator=(TunnelSession&&) noexcept;
  ~TunnelSession();

 private:
  TunnelSession(TunnelRole role, std::unique_ptr<HandshakeEngine> engine);
  void require_established() const;

  TunnelRole role_;
  std::unique_ptr<HandshakeEngine> engine_;
  TunnelState state_ = TunnelState::Handshaking;
  std::optional<Certificate> peer_certificate_;
  bool client_authenticated_ = false;
  bool offered_client_cert_ = false;
  std::optional<Msk> msk_;
  FailureReason failure_ = FailureReason::None;
};

}  // namespace eapsh
