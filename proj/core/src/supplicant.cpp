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

#include "eapsh/supplicant.hpp"

#include <system_error>

#include "eapsh/http.hpp"

namespace eapsh {

namespace {

std::optional<std::string> non_empty(const KeyValueConfig& kv, const std::string& key) {
  auto v = kv.get(key);
  if (v && v->empty()) return std::nullopt;
  return v;
}

bool is_empty_unflagged(const EapShFrame& f) {
  return f.flags.all_clear() && f.payload.empty() && !f.total_length;
}

}  // namespace

// ---- config ----

SupplicantConfig SupplicantConfig::from_kv(const KeyValueConfig& kv) {
  SupplicantConfig c;
  c.ssid = kv.get_or("ssid", "");
  c.key_mgmt = kv.get_or("key_mgmt", c.key_mgmt);
  c.eap = kv.get_or("eap", c.eap);
  c.ca_path = kv.require("ca_path");
  if (auto v = non_empty(kv, "client_cert")) c.client_cert = *v;
  if (auto v = non_empty(kv, "private_key")) c.private_key = *v;
  c.private_key_password = kv.get_or("private_key_password", "");
  c.browser_command = kv.get_or("browser_command", "");
  c.csr_key_bits = static_cast<int>(kv.get_int("csr_key_bits", c.csr_key_bits));
  c.max_eap_packet =
      static_cast<std::size_t>(kv.get_int("max_eap_packet", static_cast<long long>(c.max_eap_packet)));
  c.inactivity_timeout = Seconds(kv.get_int("inactivity_timeout", c.inactivity_timeout.count()));
  c.validate();
  return c;
}

SupplicantConfig SupplicantConfig::load(const std::filesystem::path& path) {
  return from_kv(KeyValueConfig::load(path));
}

KeyValueConfig SupplicantConfig::to_kv() const {
  KeyValueConfig kv;
  kv.set("ssid", ssid);
  kv.set("key_mgmt", key_mgmt);
  kv.set("eap", eap);
  kv.set("ca_path", ca_path.string());
  kv.set("client_cert", client_cert.string());
  kv.set("private_key", private_key.string());
  kv.set("private_key_password", private_key_password);
  kv.set("browser_command", browser_command);
  kv.set("csr_key_bits", std::to_string(csr_key_bits));
  kv.set("max_eap_packet", std::to_string(max_eap_packet));
  kv.set("inactivity_timeout", std::to_string(inactivity_timeout.count()));
  return kv;
}

void SupplicantConfig::validate() const {
  if (eap != "SH" && eap != "EAP-SH") throw Error(Errc::ConfigError, "eap must be SH");
  if (ca_path.empty()) throw Error(Errc::ConfigError, "ca_path is required");
  if (!is_allowed_key_size(csr_key_bits)) {
    throw Error(Errc::ConfigError, "csr_key_bits " + std::to_string(csr_key_bits));
  }
  if (max_eap_packet < kMinMaxEapPacket || max_eap_packet > 0xffff) {
    throw Error(Errc::ConfigError, "max_eap_packet out of range");
  }
  if (inactivity_timeout.count() <= 0) throw Error(Errc::ConfigError, "inactivity_timeout");
  if (client_cert.empty() != private_key.empty()) {
    throw Error(Errc::ConfigError, "client_cert and private_key go together");
  }
}

std::string browser_command_for(const std::string& command_template, const std::string& url) {
  std::string out;
  for (std::size_t i = 0; i < command_template.size(); ++i) {
    if (command_template.compare(i, 2, "%s") == 0) {
      out += url;
      ++i;
    } else {
      out += command_template[i];
    }
  }
  return out;
}

std::optional<Credentials> load_credentials(const SupplicantConfig& config) {
  if (config.client_cert.empty() || config.private_key.empty()) return std::nullopt;
  std::error_code ec;
  if (!std::filesystem::exists(config.client_cert, ec) ||
      !std::filesystem::exists(config.private_key, ec)) {
    return std::nullopt;
  }
  try {
    Credentials creds{Certificate::load_chain(config.client_cert),
                      KeyPair::load(config.private_key, config.private_key_password)};
    if (creds.chain.empty()) throw Error(Errc::Malformed, "empty certificate file");
    if (creds.chain.front().public_der() != creds.key.public_der()) {
      throw Error(Errc::CertMismatch, "cached certificate does not match key");
    }
    return creds;
  } catch (const Error& e) {
    throw Error(Errc::ConfigError, std::string("cached credentials: ") + e.what());
  }
}

const char* to_string(SupplicantPhase p) {
  switch (p) {
    case SupplicantPhase::Phase1: return "Phase1";
    case SupplicantPhase::AwaitStartOrSuccess: return "AwaitStartOrSuccess";
    case SupplicantPhase::Phase2Http: return "Phase2Http";
    case SupplicantPhase::Phase2AwaitCert: return "Phase2AwaitCert";
    case SupplicantPhase::Restarting: return "Restarting";
    case SupplicantPhase::Done: return "Done";
    case SupplicantPhase::Failed: return "Failed";
  }
  return "?";
}

// ---- fragment channel ----

EapShFrame FragmentChannel::send(ByteView message, Semantic semantic) {
  auto frames = fragment(message, semantic, out_code_, max_);
  outbox_.assign(std::make_move_iterator(frames.begin()), std::make_move_iterator(frames.end()));
  return next();
}

EapShFrame FragmentChannel::next() {
  if (outbox_.empty()) throw Error(Errc::InvariantViolation, "nothing left to send");
  auto f = std::move(outbox_.front());
  outbox_.pop_front();
  return f;
}

void FragmentChannel::reset() {
  outbox_.clear();
  reasm_.reset();
}

// ---- session ----

SupplicantSession::SupplicantSession(SupplicantConfig config, SupplicantOptions options)
    : config_(std::move(config)),
      options_(std::move(options)),
      clock_(options_.clock ? *options_.clock : system_clock()),
      rng_(options_.rng ? *options_.rng : system_random()),
      channel_(EapCode::Response, config_.max_eap_packet) {
  config_.validate();
  try {
    anchors_ = Certificate::load_anchors(config_.ca_path);
  } catch (const Error& e) {
    throw Error(Errc::ConfigError, std::string("ca_path: ") + e.what());
  }
  if (anchors_.empty()) throw Error(Errc::ConfigError, "ca_path holds no anchors");
  credentials_ = load_credentials(config_);
}

bool SupplicantSession::awaiting_browser() const {
  return phase_ == SupplicantPhase::Phase2Http && !awaiting_response_ && !channel_.sending();
}

TunnelSession& SupplicantSession::tunnel() {
  if (!tunnel_) throw Error(Errc::InvariantViolation, "no tunnel");
  return *tunnel_;
}

EapShFrame SupplicantSession::stamp(EapShFrame frame) const {
  frame.header.code = EapCode::Response;
  frame.header.identifier = last_id_;
  return frame;
}

void SupplicantSession::fail(Errc code, const std::string& detail) {
  phase_ = SupplicantPhase::Failed;
  failure_ = code;
  failure_detail_ = detail;
  if (endpoint_) endpoint_->close();
}

void SupplicantSession::violation(const std::string& what) {
  fail(Errc::ProtocolViolation, what);
  throw Error(Errc::ProtocolViolation, what);
}

SupplicantOutput SupplicantSession::step(const EapShFrame& inbound) {
  if (done() || failed()) throw Error(Errc::InvariantViolation, "session already finished");
  try {
    return step_inner(inbound);
  } catch (const Error& e) {
    if (!failed()) fail(e.code(), e.what());
    throw;
  }
}

SupplicantOutput SupplicantSession::step_inner(const EapShFrame& in) {
  if (in.header.code == EapCode::Success) {
    if (phase_ != SupplicantPhase::AwaitStartOrSuccess || !tunnel_ ||
        tunnel_->state() != TunnelState::Established) {
      violation("EAP Success before the tunnel was established");
    }
    msk_ = tunnel_->msk();
    phase_ = SupplicantPhase::Done;
    return {};
  }
  if (in.header.code == EapCode::Failure) {
    phase_ = SupplicantPhase::Failed;
    failure_detail_ = "EAP Failure from the authentication server";
    if (endpoint_) endpoint_->close();
    return {};
  }
  if (in.header.code != EapCode::Request) violation("supplicant only accepts Requests");
  last_id_ = in.header.identifier;

  if (channel_.sending()) {
    if (!in.is_ack()) violation("expected an acknowledgment while sending fragments");
    return {stamp(channel_.next()), {}};
  }

  switch (phase_) {
    case SupplicantPhase::Phase1: return on_handshake(in);
    case SupplicantPhase::AwaitStartOrSuccess: return on_await(in);
    case SupplicantPhase::Phase2Http: return on_http(in);
    case SupplicantPhase::Phase2AwaitCert: return on_cert(in);
    case SupplicantPhase::Restarting: return on_restart(in);
    case SupplicantPhase::Done:
    case SupplicantPhase::Failed: break;
  }
  violation("session already finished");
}

SupplicantOutput SupplicantSession::begin_phase1() {
  TunnelConfig tc;
  tc.role = TunnelRole::Client;
  tc.trust_anchors = anchors_;
  tc.clock = &clock_;
  if (credentials_) {
    tc.client_auth = ClientAuth::Offered;
    tc.own_chain = credentials_->chain;
    tc.own_key = credentials_->key;
  }
  auto [session, hello] = TunnelSession::start(tc, options_.engine_factory);
  tunnel_.emplace(std::move(session));
  channel_.reset();
  return {stamp(channel_.send(hello, Semantic::Handshake)), {}};
}

SupplicantOutput SupplicantSession::on_handshake(const EapShFrame& in) {
  if (!tunnel_) {
    if (!is_empty_unflagged(in)) violation("phase 1 must open with an empty Request");
    return begin_phase1();
  }
  if (in.flags.start || in.flags.http_request || in.flags.cert) {
    violation("flagged frame during phase 1");
  }
  auto fed = channel_.inbound().feed(in);
  if (auto* more = std::get_if<ReassemblyBuffer::NeedMore>(&fed)) {
    return {stamp(more->ack), {}};
  }
  auto& msg = std::get<ReassemblyBuffer::Complete>(fed).message;
  auto result = tunnel_->drive(msg);
  if (tunnel_->state() == TunnelState::Failed) {
    std::string detail = "tunnel handshake failed";
    for (const auto& e : result.events) {
      if (e.kind == TunnelEvent::Kind::HandshakeFailed) {
        detail += std::string(": ") + to_string(e.reason);
        if (!e.detail.empty()) detail += " (" + e.detail + ")";
      }
    }
    fail(Errc::HandshakeFailed, detail);
    return {stamp(channel_.send(result.outbound, Semantic::Handshake)), {}};
  }
  if (tunnel_->state() == TunnelState::Established) phase_ = SupplicantPhase::AwaitStartOrSuccess;
  return {stamp(channel_.send(result.outbound, Semantic::Handshake)), {}};
}

SupplicantOutput SupplicantSession::on_await(const EapShFrame& in) {
  if (!in.is_start()) violation("expected EAP-SH Start or EAP Success");
  if (round_ >= 1) {
    fail(Errc::ProtocolViolation, "second Start in one attempt");
    return {};
  }
  SupplicantOutput out;
  const auto url = open_local_endpoint();
  phase_ = SupplicantPhase::Phase2Http;
  awaiting_response_ = false;
  out.actions.push_back(LaunchBrowser{url, browser_command_for(config_.browser_command, url)});
  return out;
}

std::string SupplicantSession::open_local_endpoint() {
  if (!endpoint_ || !endpoint_->is_open()) endpoint_.emplace(net::LocalEndpoint::open(rng_));
  return endpoint_->url();
}

SupplicantOutput SupplicantSession::relay_cycle(ByteView http_request) {
  if (!awaiting_browser()) throw Error(Errc::InvariantViolation, "not waiting for the browser");
  auto n = http::complete_request_length(http_request);
  if (!n || *n != http_request.size()) {
    throw Error(Errc::MalformedHttp, "not exactly one complete HTTP request");
  }
  auto sealed = tunnel().seal(http_request);
  awaiting_response_ = true;
  return {stamp(channel_.send(sealed, Semantic::HttpRequest)), {}};
}

SupplicantOutput SupplicantSession::on_http(const EapShFrame& in) {
  if (in.flags.start) violation("Start received during phase 2");
  if (in.flags.http_request || in.flags.cert) violation("unexpected flags during phase 2");
  if (!awaiting_response_) violation("Request while the browser has nothing outstanding");

  auto fed = channel_.inbound().feed(in);
  if (auto* more = std::get_if<ReassemblyBuffer::NeedMore>(&fed)) {
    return {stamp(more->ack), {}};
  }
  auto plain = tunnel().open(std::get<ReassemblyBuffer::Complete>(fed).message);
  awaiting_response_ = false;

  SupplicantOutput out;
  deliver_response(plain, out.actions);
  if (pending_identity_) {
    out.actions.push_back(CloseLocalEndpoint{});
    if (endpoint_) endpoint_->close();
    out.frame = enroll();
  }
  return out;
}

Bytes SupplicantSession::deliver_response(ByteView http_response,
                                          std::vector<SupplicantAction>& actions) {
  auto stripped = http::strip_header(http_response, http::kUsernameHeader);
  if (stripped.value) pending_identity_ = stripped.value;
  actions.push_back(DeliverToBrowser{stripped.message});
  return std::move(stripped.message);
}

EapShFrame SupplicantSession::enroll() {
  if (!pending_identity_) throw Error(Errc::InvariantViolation, "no identity to enroll");
  const auto t0 = std::chrono::steady_clock::now();
  std::optional<KeyPair> key;
  try {
    key = KeyPair::generate(config_.csr_key_bits);
  } catch (const Error& e) {
    throw Error(Errc::KeyGenFailure, e.what());
  }
  std::string cn = *pending_identity_;
  if (options_.csr_name_override) cn = options_.csr_name_override(cn);
  auto csr = build_csr(*key, cn);
  timings_.csr_generation = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::steady_clock::now() - t0);

  pending_key_ = std::move(key);
  phase_ = SupplicantPhase::Phase2AwaitCert;
  auto sealed = tunnel().seal(csr.der());
  return stamp(channel_.send(sealed, Semantic::Csr));
}

SupplicantOutput SupplicantSession::on_cert(const EapShFrame& in) {
  if (!in.flags.cert || in.flags.start || in.flags.http_request) {
    violation("expected a C-flagged certificate");
  }
  auto fed = channel_.inbound().feed(in);
  if (auto* more = std::get_if<ReassemblyBuffer::NeedMore>(&fed)) {
    return {stamp(more->ack), {}};
  }
  auto plain = tunnel().open(std::get<ReassemblyBuffer::Complete>(fed).message);
  install_and_restart(plain);
  return {stamp(EapShFrame::ack(EapCode::Response, last_id_)), {}};
}

void SupplicantSession::install_and_restart(ByteView cert_message) {
  if (!pending_key_) throw Error(Errc::InvariantViolation, "no key awaiting a certificate");
  std::vector<Certificate> chain;
  try {
    chain = Certificate::chain_from_der(cert_message);
  } catch (const Error& e) {
    throw Error(Errc::CertMismatch, e.what());
  }
  if (chain.empty()) throw Error(Errc::CertMismatch, "no certificate in message");
  if (chain.front().public_der() != pending_key_->public_der()) {
    throw Error(Errc::CertMismatch, "certificate is not for our key");
  }
  if (!config_.client_cert.empty()) {
    try {
      save_chain(config_.client_cert, chain);
      pending_key_->save(config_.private_key, config_.private_key_password);
    } catch (const std::exception& e) {
      throw Error(Errc::PersistFailure, e.what());
    }
  }
  credentials_ = Credentials{std::move(chain), *pending_key_};
  pending_key_.reset();
  pending_identity_.reset();
  tunnel_.reset();
  channel_.reset();
  ++round_;
  phase_ = SupplicantPhase::Restarting;
}

SupplicantOutput SupplicantSession::on_restart(const EapShFrame& in) {
  if (!is_empty_unflagged(in)) violation("expected the AS to restart phase 1");
  phase_ = SupplicantPhase::Phase1;
  return begin_phase1();
}

}  // namespace eapsh
