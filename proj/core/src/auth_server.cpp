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

#include "eapsh/auth_server.hpp"

#include "eapsh/http.hpp"
#include "eapsh/net.hpp"

namespace eapsh {

// ---- config ----

AsConfig AsConfig::from_kv(const KeyValueConfig& kv) {
  AsConfig c;
  c.certificate_file = kv.require("certificate_file");
  c.private_key_file = kv.require("private_key_file");
  c.private_key_password = kv.get_or("private_key_password", "");
  c.ca_file = kv.require("ca_file");
  c.user_certificate_issuer_cert = kv.require("user_certificate_issuer_cert");
  c.user_certificate_issuer_key = kv.require("user_certificate_issuer_key");
  c.user_certificate_issuer_key_password = kv.get_or("user_certificate_issuer_key_password", "");
  c.user_certificate_validity =
      Seconds(kv.get_int("user_certificate_validity", c.user_certificate_validity.count()));
  c.captive_portal_endpoint = parse_host_port(kv.require("captive_portal_endpoint"));
  c.max_eap_packet = static_cast<std::size_t>(
      kv.get_int("max_eap_packet", static_cast<long long>(c.max_eap_packet)));
  c.inactivity_timeout = Seconds(kv.get_int("inactivity_timeout", c.inactivity_timeout.count()));
  if (c.user_certificate_validity.count() <= 0) {
    throw Error(Errc::ConfigError, "user_certificate_validity must be positive");
  }
  return c;
}

AsConfig AsConfig::load(const std::filesystem::path& path) {
  return from_kv(KeyValueConfig::load(path));
}

KeyValueConfig AsConfig::to_kv() const {
  KeyValueConfig kv;
  kv.set("certificate_file", certificate_file.string());
  kv.set("private_key_file", private_key_file.string());
  kv.set("private_key_password", private_key_password);
  kv.set("ca_file", ca_file.string());
  kv.set("user_certificate_issuer_cert", user_certificate_issuer_cert.string());
  kv.set("user_certificate_issuer_key", user_certificate_issuer_key.string());
  kv.set("user_certificate_issuer_key_password", user_certificate_issuer_key_password);
  kv.set("user_certificate_validity", std::to_string(user_certificate_validity.count()));
  kv.set("captive_portal_endpoint", captive_portal_endpoint.to_string());
  kv.set("max_eap_packet", std::to_string(max_eap_packet));
  kv.set("inactivity_timeout", std::to_string(inactivity_timeout.count()));
  return kv;
}

AsSettings AsSettings::load(const AsConfig& c) {
  try {
    AsSettings s{
        Certificate::load_chain(c.certificate_file),
        KeyPair::load(c.private_key_file, c.private_key_password),
        Certificate::load_anchors(c.ca_file),
        IssuerConfig{Certificate::load_chain(c.user_certificate_issuer_cert),
                     KeyPair::load(c.user_certificate_issuer_key,
                                   c.user_certificate_issuer_key_password),
                     c.user_certificate_validity},
        c.captive_portal_endpoint,
        c.max_eap_packet,
        c.inactivity_timeout,
    };
    s.validate();
    return s;
  } catch (const Error& e) {
    if (e.code() == Errc::ConfigError) throw;
    throw Error(Errc::ConfigError, e.what());
  }
}

void AsSettings::validate() const {
  if (server_chain.empty()) throw Error(Errc::ConfigError, "certificate_file holds no certificate");
  if (server_chain.front().public_der() != server_key.public_der()) {
    throw Error(Errc::ConfigError, "server key does not match certificate_file");
  }
  if (client_anchors.empty()) throw Error(Errc::ConfigError, "ca_file holds no certificate");
  check_issuer(issuer);
  if (max_eap_packet < kMinMaxEapPacket || max_eap_packet > 0xffff) {
    throw Error(Errc::ConfigError, "max_eap_packet out of range");
  }
}

// ---- portal relay ----

Bytes relay_to_portal(ByteView request, const HostPort& endpoint,
                      std::chrono::milliseconds timeout) {
  net::Socket socket;
  try {
    socket = net::connect(endpoint, timeout);
    socket.send_all(request);
  } catch (const Error& e) {
    throw Error(Errc::PortalUnreachable, e.what());
  }
  try {
    return net::read_http_response(socket, timeout);
  } catch (const Error& e) {
    if (e.code() == Errc::MalformedResponse) throw;
    throw Error(Errc::PortalUnreachable, e.what());
  }
}

RewriteResult rewrite_username_header(ByteView response, const PseudonymKey& key,
                                      PseudonymCache& cache, SystemTime now,
                                      RandomSource& rng) {
  auto identity = http::find_header(response, http::kUsernameHeader);
  if (!identity) return {Bytes(response.begin(), response.end()), std::nullopt};
  auto pseudonym = generate_pseudonym(*identity, key, rng);
  auto replaced = http::replace_header_value(response, http::kUsernameHeader, pseudonym.text);
  cache.insert(pseudonym, now);
  return {std::move(replaced.message), pseudonym};
}

Certificate handle_csr(ByteView csr_der, PseudonymCache& cache, const IssuerConfig& issuer,
                       SystemTime now) {
  std::optional<CertSigningRequest> csr;
  try {
    csr = parse_csr(csr_der);
  } catch (const Error& e) {
    throw Error(Errc::BadCsr, e.what());
  }
  const auto cn = csr->subject_common_name();
  if (!cache.take_fresh(cn, now)) {
    throw Error(Errc::StalePseudonym, "CSR name was not recently issued: " + cn);
  }
  return issue_certificate(issuer, *csr, now);
}

// ---- server ----

AuthServer::AuthServer(AsSettings settings, AuthServerOptions options)
    : settings_(std::move(settings)),
      options_(std::move(options)),
      clock_(options_.clock ? *options_.clock : system_clock()),
      rng_(options_.rng ? *options_.rng : system_random()),
      key_(PseudonymKey::generate(rng_)) {
  settings_.validate();
  if (!options_.relay) {
    options_.relay = [endpoint = settings_.portal](ByteView request) {
      return relay_to_portal(request, endpoint);
    };
  }
  if (!options_.status_provider) {
    options_.status_provider = std::make_shared<StubStatusProvider>(
        settings_.issuer.ca_chain.front(), settings_.issuer.ca_key, clock_);
  }
}

AuthServer::~AuthServer() = default;

std::unique_ptr<AsSession> AuthServer::new_session() {
  return std::make_unique<AsSession>(*this, static_cast<std::uint8_t>(rng_.uniform(0, 255)));
}

void AuthServer::regenerate_pseudonym_key() {
  std::lock_guard lock(mu_);
  key_ = PseudonymKey::generate(rng_);
  cache_.clear();
}

PseudonymKey AuthServer::pseudonym_key() const {
  std::lock_guard lock(mu_);
  return key_;
}

AsStats AuthServer::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

Bytes AuthServer::relay(ByteView request) {
  Bytes response;
  try {
    response = options_.relay(request);
  } catch (const Error& e) {
    if (e.code() != Errc::PortalUnreachable && e.code() != Errc::MalformedResponse) throw;
    std::lock_guard lock(mu_);
    ++stats_.portal_requests;
    ++stats_.portal_failures;
    return http::synthesize_bad_gateway(e.what());
  }
  const auto key = pseudonym_key();
  auto rewritten = rewrite_username_header(response, key, cache_, clock_.now(), rng_);
  std::lock_guard lock(mu_);
  ++stats_.portal_requests;
  return std::move(rewritten.response);
}

Certificate AuthServer::issue(ByteView csr_der) {
  const auto t0 = std::chrono::steady_clock::now();
  auto cert = handle_csr(csr_der, cache_, settings_.issuer, clock_.now());
  const auto took = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::steady_clock::now() - t0);
  std::lock_guard lock(mu_);
  ++stats_.certificates_issued;
  stats_.issuance_times.push_back(took);
  return cert;
}

std::string AuthServer::resolve(std::string_view common_name) const {
  return resolve_pseudonym(Pseudonym{std::string(common_name)}, pseudonym_key());
}

TunnelConfig AuthServer::tunnel_config() const {
  TunnelConfig tc;
  tc.role = TunnelRole::Server;
  tc.trust_anchors = settings_.client_anchors;
  tc.own_chain = settings_.server_chain;
  tc.own_key = settings_.server_key;
  tc.client_auth = ClientAuth::Requested;
  tc.status_provider = options_.status_provider;
  tc.clock = &clock_;
  return tc;
}

// ---- session ----

const char* to_string(AsPhase p) {
  switch (p) {
    case AsPhase::Phase1: return "Phase1";
    case AsPhase::Phase2: return "Phase2";
    case AsPhase::AwaitRestart: return "AwaitRestart";
    case AsPhase::Done: return "Done";
    case AsPhase::Failed: return "Failed";
  }
  return "?";
}

AsSession::AsSession(AuthServer& server, std::uint8_t first_identifier)
    : server_(server),
      channel_(EapCode::Request, server.settings().max_eap_packet),
      id_(first_identifier),
      last_activity_(server.clock().now()) {}

bool AsSession::expired(SystemTime now) const {
  return !finished() && now - last_activity_ > server_.settings().inactivity_timeout;
}

EapShFrame AsSession::stamp(EapShFrame frame) {
  frame.header.code = EapCode::Request;
  frame.header.identifier = ++id_;
  return frame;
}

void AsSession::violation(const std::string& what) {
  throw Error(Errc::ProtocolViolation, what);
}

AsOutput AsSession::fail(Errc code, const std::string& detail) {
  phase_ = AsPhase::Failed;
  tunnel_.reset();
  AsDecision d;
  d.kind = AsDecision::Kind::Failure;
  d.reason = code;
  d.detail = detail;
  return {EapShFrame::failure(id_), std::move(d)};
}

AsOutput AsSession::send(ByteView message, Semantic semantic) {
  return {stamp(channel_.send(message, semantic)), std::nullopt};
}

AsOutput AsSession::begin() {
  if (began_) throw Error(Errc::InvariantViolation, "session already started");
  began_ = true;
  last_activity_ = server_.clock().now();
  return start_round();
}

AsOutput AsSession::start_round() {
  auto [session, initial] = TunnelSession::start(server_.tunnel_config(), server_.engine_factory());
  (void)initial;
  tunnel_.emplace(std::move(session));
  channel_.reset();
  phase_ = AsPhase::Phase1;
  return {stamp(EapShFrame::ack(EapCode::Request, 0)), std::nullopt};
}

AsOutput AsSession::step(const EapShFrame& in) {
  if (!began_ || finished()) throw Error(Errc::InvariantViolation, "session not running");
  last_activity_ = server_.clock().now();
  try {
    return step_inner(in);
  } catch (const Error& e) {
    return fail(e.code(), e.what());
  }
}

AsOutput AsSession::step_inner(const EapShFrame& in) {
  if (in.header.code != EapCode::Response) violation("AS only accepts Responses");
  if (in.header.identifier != id_) violation("Response identifier does not match");

  if (channel_.sending()) {
    if (!in.is_ack()) violation("expected an acknowledgment while sending fragments");
    return {stamp(channel_.next()), std::nullopt};
  }
  switch (phase_) {
    case AsPhase::Phase1: return on_phase1(in);
    case AsPhase::Phase2: return on_phase2(in);
    case AsPhase::AwaitRestart: return on_restart(in);
    case AsPhase::Done:
    case AsPhase::Failed: break;
  }
  violation("session finished");
}

AsOutput AsSession::on_phase1(const EapShFrame& in) {
  if (in.flags.start || in.flags.http_request || in.flags.cert) {
    violation("flagged frame during phase 1");
  }
  auto fed = channel_.inbound().feed(in);
  if (auto* more = std::get_if<ReassemblyBuffer::NeedMore>(&fed)) {
    return {stamp(more->ack), std::nullopt};
  }
  auto& msg = std::get<ReassemblyBuffer::Complete>(fed).message;

  if (tunnel_->state() == TunnelState::Established) {
    if (!msg.empty()) violation("data after the handshake completed");
    return decide();
  }
  if (msg.empty()) return fail(Errc::HandshakeFailed, "peer abandoned the handshake");

  auto result = tunnel_->drive(msg);
  if (tunnel_->state() == TunnelState::Failed) {
    std::string detail = "tunnel handshake failed";
    for (const auto& e : result.events) {
      if (e.kind == TunnelEvent::Kind::HandshakeFailed && !e.detail.empty()) {
        detail += ": " + e.detail;
      }
    }
    return fail(Errc::HandshakeFailed, detail);
  }
  if (!result.outbound.empty()) return send(result.outbound, Semantic::Handshake);
  if (tunnel_->state() == TunnelState::Established) return decide();
  return send({}, Semantic::Handshake);
}

AsOutput AsSession::decide() {
  if (tunnel_->client_authenticated() && tunnel_->peer_certificate()) {
    const auto& cert = *tunnel_->peer_certificate();
    try {
      validate_chain(cert, server_.settings().client_anchors, server_.clock().now());
      identity_ = server_.resolve(cert.subject_common_name());
      msk_ = tunnel_->msk();
      phase_ = AsPhase::Done;
      AsDecision d;
      d.kind = AsDecision::Kind::Success;
      d.msk = msk_;
      d.identity = *identity_;
      return {EapShFrame::success(id_), std::move(d)};
    } catch (const Error& e) {
      fallback_reason_ = e.what();
    }
  } else {
    fallback_reason_ = "client presented no acceptable certificate";
  }
  if (round_ >= 1) {
    return fail(Errc::ProtocolViolation, "client still unauthenticated after restart: " +
                                             fallback_reason_);
  }
  phase_ = AsPhase::Phase2;
  return {stamp(EapShFrame::start_request(0)), std::nullopt};
}

AsOutput AsSession::on_phase2(const EapShFrame& in) {
  if (in.flags.start) violation("Start flag from the supplicant");
  if (!in.flags.http_request && !in.flags.cert) violation("unflagged data during phase 2");
  auto fed = channel_.inbound().feed(in);
  if (auto* more = std::get_if<ReassemblyBuffer::NeedMore>(&fed)) {
    return {stamp(more->ack), std::nullopt};
  }
  auto& complete = std::get<ReassemblyBuffer::Complete>(fed);
  auto plain = tunnel_->open(complete.message);

  if (complete.semantic == Semantic::HttpRequest) {
    auto response = server_.relay(plain);
    return send(tunnel_->seal(response), Semantic::HttpResponse);
  }
  if (complete.semantic != Semantic::Csr) violation("unexpected message in phase 2");

  auto cert = server_.issue(plain);
  std::vector<Certificate> chain{cert};
  for (const auto& c : server_.settings().issuer.ca_chain) chain.push_back(c);
  phase_ = AsPhase::AwaitRestart;
  return send(tunnel_->seal(chain_to_der(chain)), Semantic::Certificate);
}

AsOutput AsSession::on_restart(const EapShFrame& in) {
  if (!in.is_ack()) violation("expected the certificate acknowledgment");
  ++round_;
  return start_round();
}

}  // namespace eapsh
