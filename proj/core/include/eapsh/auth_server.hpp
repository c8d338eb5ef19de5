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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "eapsh/bytes.hpp"
#include "eapsh/clock.hpp"
#include "eapsh/codec.hpp"
#include "eapsh/config.hpp"
#include "eapsh/error.hpp"
#include "eapsh/pki.hpp"
#include "eapsh/pseudonym.hpp"
#include "eapsh/random.hpp"
#include "eapsh/supplicant.hpp"
#include "eapsh/tunnel.hpp"

namespace eapsh {

// The EAP-SH section of the AS configuration:
//
//   certificate_file = /etc/eapsh/server.pem      (leaf, then its issuer)
//   private_key_file = /etc/eapsh/server.key
//   private_key_password = whatever
//   ca_file = /etc/eapsh/uca.pem                  (anchors for user certificates)
//   user_certificate_issuer_cert = /etc/eapsh/uca.pem
//   user_certificate_issuer_key = /etc/eapsh/uca.key
//   user_certificate_issuer_key_password = whatever
//   user_certificate_validity = 86400
//   captive_portal_endpoint = 127.0.0.1:8080
struct AsConfig {
  std::filesystem::path certificate_file;
  std::filesystem::path private_key_file;
  std::string private_key_password;
  std::filesystem::path ca_file;
  std::filesystem::path user_certificate_issuer_cert;
  std::filesystem::path user_certificate_issuer_key;
  std::string user_certificate_issuer_key_password;
  Seconds user_certificate_validity = kDefaultUserCertValidity;
  HostPort captive_portal_endpoint;
  std::size_t max_eap_packet = kDefaultMaxEapPacket;
  Seconds inactivity_timeout = kDefaultInactivityTimeout;

  // Throws Error(ConfigError).
  static AsConfig from_kv(const KeyValueConfig& kv);
  static AsConfig load(const std::filesystem::path& path);
  KeyValueConfig to_kv() const;
};

// Key material and endpoints once every file has been read.
struct AsSettings {
  std::vector<Certificate> server_chain;
  KeyPair server_key;
  std::vector<Certificate> client_anchors;
  IssuerConfig issuer;
  HostPort portal;
  std::size_t max_eap_packet = kDefaultMaxEapPacket;
  Seconds inactivity_timeout = kDefaultInactivityTimeout;

  // Throws Error(ConfigError) when a file is missing or the keys do not match.
  static AsSettings load(const AsConfig& config);
  void validate() const;
};

// Forwards one complete HTTP request to the portal over a new connection and
// returns the complete response. Throws Error(PortalUnreachable) or
// Error(MalformedResponse).
Bytes relay_to_portal(ByteView request, const HostPort& endpoint,
                      std::chrono::milliseconds timeout = std::chrono::milliseconds(10000));

struct RewriteResult {
  Bytes response;
  std::optional<Pseudonym> issued;
};

// Replaces the X-username value with a fresh pseudonym and records it in the
// cache. Every other byte is left alone.
RewriteResult rewrite_username_header(ByteView response, const PseudonymKey& key,
                                      PseudonymCache& cache, SystemTime now,
                                      RandomSource& rng = system_random());

// Authorizes a CSR against the pseudonym cache (consuming the entry) and
// issues its certificate. Throws Error(BadCsr) or Error(StalePseudonym).
Certificate handle_csr(ByteView csr_der, PseudonymCache& cache, const IssuerConfig& issuer,
                       SystemTime now);

using PortalRelay = std::function<Bytes(ByteView request)>;

struct AuthServerOptions {
  const Clock* clock = nullptr;
  RandomSource* rng = nullptr;
  EngineFactory engine_factory;
  // Defaults to relay_to_portal against settings.portal.
  PortalRelay relay;
  // Defaults to a stub responder signing with the user-certificate issuer.
  std::shared_ptr<StatusProvider> status_provider;
};

struct AsStats {
  std::size_t certificates_issued = 0;
  std::size_t portal_requests = 0;
  std::size_t portal_failures = 0;
  std::vector<std::chrono::microseconds> issuance_times;
};

class AsSession;

// State shared by every session: configuration, the volatile pseudonym key,
// and the pseudonym cache.
class AuthServer {
 public:
  explicit AuthServer(AsSettings settings, AuthServerOptions options = {});
  ~AuthServer();

  std::unique_ptr<AsSession> new_session();

  // What happens on a process restart: a new pseudonym key and an empty cache.
  void regenerate_pseudonym_key();

  const AsSettings& settings() const { return settings_; }
  PseudonymKey pseudonym_key() const;
  PseudonymCache& cache() { return cache_; }
  const Clock& clock() const { return clock_; }
  RandomSource& rng() { return rng_; }
  AsStats stats() const;

  // Portal round trip with the pseudonym substitution; portal trouble turns
  // into a synthesized 502 page.
  Bytes relay(ByteView request);
  Certificate issue(ByteView csr_der);
  // The real identity behind a certificate CN. Throws like resolve_pseudonym.
  std::string resolve(std::string_view common_name) const;
  TunnelConfig tunnel_config() const;
  const EngineFactory& engine_factory() const { return options_.engine_factory; }

 private:
  AsSettings settings_;
  AuthServerOptions options_;
  const Clock& clock_;
  RandomSource& rng_;
  PseudonymCache cache_;
  mutable std::mutex mu_;
  PseudonymKey key_;
  AsStats stats_;
};

enum class AsPhase { Phase1, Phase2, AwaitRestart, Done, Failed };

const char* to_string(AsPhase p);

struct AsDecision {
  enum class Kind { Success, Failure };
  Kind kind = Kind::Failure;
  std::optional<Msk> msk;
  std::string identity;
  std::optional<Errc> reason;
  std::string detail;
};

struct AsOutput {
  std::optional<EapShFrame> frame;
  std::optional<AsDecision> decision;
};

class AsSession {
 public:
  AsSession(AuthServer& server, std::uint8_t first_identifier);

  // The empty Request that opens phase 1.
  AsOutput begin();
  // Never throws for bad input: problems end the session with a Failure.
  AsOutput step(const EapShFrame& response);

  AsPhase phase() const { return phase_; }
  int round() const { return round_; }
  const std::optional<std::string>& authenticated_identity() const { return identity_; }
  const std::optional<Msk>& msk_out() const { return msk_; }
  // Why phase 1 fell back to enrollment, if it did.
  const std::string& fallback_reason() const { return fallback_reason_; }
  bool finished() const { return phase_ == AsPhase::Done || phase_ == AsPhase::Failed; }
  bool expired(SystemTime now) const;

 private:
  AsOutput step_inner(const EapShFrame& in);
  AsOutput start_round();
  AsOutput on_phase1(const EapShFrame& in);
  AsOutput on_phase2(const EapShFrame& in);
  AsOutput on_restart(const EapShFrame& in);
  AsOutput decide();
  AsOutput send(ByteView message, Semantic semantic);
  AsOutput fail(Errc code, const std::string& detail);
  EapShFrame stamp(EapShFrame frame);
  [[noreturn]] void violation(const std::string& what);

  AuthServer& server_;
  AsPhase phase_ = AsPhase::Phase1;
  std::optional<TunnelSession> tunnel_;
  FragmentChannel channel_;
  std::uint8_t id_;
  bool began_ = false;
  int round_ = 0;
  std::optional<std::string> identity_;
  std::optional<Msk> msk_;
  std::string fallback_reason_;
  SystemTime last_activity_;
};

}  // namespace eapsh
