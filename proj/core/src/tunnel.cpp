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

#include "eapsh/tunnel.hpp"

#include <algorithm>
#include <cstring>

#include "eapsh/error.hpp"
#include "ossl.hpp"

namespace eapsh {

const char* to_string(FailureReason r) {
  switch (r) {
    case FailureReason::None: return "None";
    case FailureReason::UnknownAuthority: return "UnknownAuthority";
    case FailureReason::Expired: return "Expired";
    case FailureReason::StatusMissing: return "StatusMissing";
    case FailureReason::StatusRevoked: return "StatusRevoked";
    case FailureReason::StatusInvalid: return "StatusInvalid";
    case FailureReason::Protocol: return "Protocol";
    case FailureReason::ResumptionAttempted: return "ResumptionAttempted";
  }
  return "?";
}

bool DriveResult::has(TunnelEvent::Kind k) const {
  return std::any_of(events.begin(), events.end(),
                     [k](const TunnelEvent& e) { return e.kind == k; });
}

void TunnelConfig::validate() const {
  if (allow_resumption) throw Error(Errc::ConfigError, "session resumption is not permitted");
  if (role == TunnelRole::Server) {
    if (own_chain.empty() || !own_key) {
      throw Error(Errc::ConfigError, "server needs a certificate chain and private key");
    }
    if (client_auth != ClientAuth::Requested) {
      throw Error(Errc::ConfigError, "server must request client authentication");
    }
  } else {
    if (trust_anchors.empty()) throw Error(Errc::ConfigError, "client needs trust anchors");
    if (client_auth == ClientAuth::Requested) {
      throw Error(Errc::ConfigError, "client_auth=Requested is a server setting");
    }
    if (client_auth == ClientAuth::Offered && (own_chain.empty() || !own_key)) {
      throw Error(Errc::ConfigError, "offering client auth needs a certificate and key");
    }
  }
}

namespace {

// Plaintext framing inside the tunnel: 4-byte big-endian length, then data.
// Lets an empty message produce a record and marks message boundaries.
constexpr std::size_t kFrameHeader = 4;

class OpenSslEngine final : public HandshakeEngine {
 public:
  explicit OpenSslEngine(const TunnelConfig& cfg)
      : cfg_(cfg), clock_(cfg.clock ? *cfg.clock : system_clock()) {
    ctx_.reset(SSL_CTX_new(TLS_method()));
    if (!ctx_) ossl::fail(Errc::ConfigError, "SSL_CTX_new");
    SSL_CTX_set_min_proto_version(ctx_.get(), TLS1_2_VERSION);
    SSL_CTX_set_options(ctx_.get(), SSL_OP_NO_TICKET | SSL_OP_NO_RENEGOTIATION);
    SSL_CTX_set_session_cache_mode(ctx_.get(), SSL_SESS_CACHE_OFF);
    SSL_CTX_set_num_tickets(ctx_.get(), 0);

    X509_STORE* store = SSL_CTX_get_cert_store(ctx_.get());
    for (const auto& a : cfg.trust_anchors) X509_STORE_add_cert(store, a.native());
    ERR_clear_error();
    X509_VERIFY_PARAM* param = SSL_CTX_get0_param(ctx_.get());
    X509_VERIFY_PARAM_set_flags(param, X509_V_FLAG_PARTIAL_CHAIN);
    X509_VERIFY_PARAM_set_time(param, static_cast<time_t>(to_unix(clock_.now())));

    const bool present_cert = cfg.role == TunnelRole::Server ||
                              cfg.client_auth == ClientAuth::Offered;
    if (present_cert) {
      ossl::check(SSL_CTX_use_certificate(ctx_.get(), cfg.own_chain.front().native()),
                  Errc::ConfigError, "SSL_CTX_use_certificate");
      for (std::size_t i = 1; i < cfg.own_chain.size(); ++i) {
        ossl::check(static_cast<int>(SSL_CTX_add1_chain_cert(ctx_.get(),
                                                            cfg.own_chain[i].native())),
                    Errc::ConfigError, "SSL_CTX_add1_chain_cert");
      }
      ossl::check(SSL_CTX_use_PrivateKey(ctx_.get(), cfg.own_key->native()),
                  Errc::ConfigError, "SSL_CTX_use_PrivateKey");
      ossl::check(SSL_CTX_check_private_key(ctx_.get()), Errc::ConfigError,
                  "certificate and key do not match");
    }

    if (cfg.role == TunnelRole::Client) {
      SSL_CTX_set_verify(ctx_.get(), SSL_VERIFY_PEER, nullptr);
      SSL_CTX_set_tlsext_status_cb(ctx_.get(), &OpenSslEngine::client_status_cb);
      SSL_CTX_set_tlsext_status_arg(ctx_.get(), this);
    } else {
      // Client certificate problems are recorded, never fatal.
      SSL_CTX_set_verify(ctx_.get(), SSL_VERIFY_PEER | SSL_VERIFY_CLIENT_ONCE,
                         [](int, X509_STORE_CTX*) { return 1; });
      if (cfg.status_provider) {
        SSL_CTX_set_tlsext_status_cb(ctx_.get(), &OpenSslEngine::server_status_cb);
        SSL_CTX_set_tlsext_status_arg(ctx_.get(), this);
      }
    }

    ssl_.reset(SSL_new(ctx_.get()));
    if (!ssl_) ossl::fail(Errc::ConfigError, "SSL_new");
    rbio_ = BIO_new(BIO_s_mem());
    wbio_ = BIO_new(BIO_s_mem());
    BIO_set_mem_eof_return(rbio_, -1);
    SSL_set_bio(ssl_.get(), rbio_, wbio_);
    if (cfg.role == TunnelRole::Client) {
      SSL_set_tlsext_status_type(ssl_.get(), TLSEXT_STATUSTYPE_ocsp);
      SSL_set_connect_state(ssl_.get());
    } else {
      SSL_set_accept_state(ssl_.get());
    }
  }

  Bytes start() override {
    if (cfg_.role == TunnelRole::Server) return {};
    auto result = drive({});
    if (result.has(TunnelEvent::Kind::HandshakeFailed)) {
      throw Error(Errc::HandshakeFailed, result.events.back().detail);
    }
    return std::move(result.outbound);
  }

  DriveResult drive(ByteView inbound) override {
    DriveResult result;
    if (!inbound.empty()) {
      BIO_write(rbio_, inbound.data(), static_cast<int>(inbound.size()));
    }
    ERR_clear_error();
    int rc = SSL_do_handshake(ssl_.get());
    int err = rc == 1 ? SSL_ERROR_NONE : SSL_get_error(ssl_.get(), rc);
    result.outbound = ossl::drain(wbio_);

    if (rc == 1) {
      if (SSL_session_reused(ssl_.get())) {
        result.events.push_back({TunnelEvent::Kind::HandshakeFailed,
                                 FailureReason::ResumptionAttempted, "session was resumed"});
        return result;
      }
      result.events.push_back({TunnelEvent::Kind::Established, FailureReason::None, {}});
      return result;
    }
    if (err == SSL_ERROR_WANT_READ || err == SSL_ERROR_WANT_WRITE) return result;

    TunnelEvent failed{TunnelEvent::Kind::HandshakeFailed, FailureReason::Protocol,
                       ossl::last_error()};
    if (status_failure_ != FailureReason::None) {
      failed.reason = status_failure_;
      failed.detail = status_detail_;
    } else if (cfg_.role == TunnelRole::Client) {
      long vr = SSL_get_verify_result(ssl_.get());
      if (vr == X509_V_ERR_CERT_HAS_EXPIRED || vr == X509_V_ERR_CERT_NOT_YET_VALID) {
        failed.reason = FailureReason::Expired;
        failed.detail = X509_verify_cert_error_string(vr);
      } else if (vr != X509_V_OK) {
        failed.reason = FailureReason::UnknownAuthority;
        failed.detail = X509_verify_cert_error_string(vr);
      }
    }
    result.events.push_back(std::move(failed));
    return result;
  }

  Bytes seal(ByteView plaintext) override {
    Bytes framed;
    framed.reserve(kFrameHeader + plaintext.size());
    const auto n = static_cast<std::uint32_t>(plaintext.size());
    for (int shift = 24; shift >= 0; shift -= 8) {
      framed.push_back(static_cast<std::uint8_t>(n >> shift));
    }
    append(framed, plaintext);
    ERR_clear_error();
    int rc = SSL_write(ssl_.get(), framed.data(), static_cast<int>(framed.size()));
    if (rc <= 0 || static_cast<std::size_t>(rc) != framed.size()) {
      ossl::fail(Errc::IntegrityFailure, "SSL_write");
    }
    return ossl::drain(wbio_);
  }

  Bytes open(ByteView records) override {
    if (!records.empty()) BIO_write(rbio_, records.data(), static_cast<int>(records.size()));
    ERR_clear_error();
    std::uint8_t buf[4096];
    for (;;) {
      int rc = SSL_read(ssl_.get(), buf, sizeof(buf));
      if (rc > 0) {
        inbound_.insert(inbound_.end(), buf, buf + rc);
        continue;
      }
      int err = SSL_get_error(ssl_.get(), rc);
      if (err == SSL_ERROR_WANT_READ) break;
      ossl::fail(Errc::IntegrityFailure, "record rejected");
    }
    if (inbound_.size() < kFrameHeader) {
      throw Error(Errc::Malformed, "incomplete sealed message");
    }
    const std::size_t n = (std::size_t{inbound_[0]} << 24) | (std::size_t{inbound_[1]} << 16) |
                          (std::size_t{inbound_[2]} << 8) | inbound_[3];
    if (inbound_.size() < kFrameHeader + n) {
      throw Error(Errc::Malformed, "incomplete sealed message");
    }
    Bytes message(inbound_.begin() + kFrameHeader,
                  inbound_.begin() + static_cast<std::ptrdiff_t>(kFrameHeader + n));
    inbound_.erase(inbound_.begin(),
                   inbound_.begin() + static_cast<std::ptrdiff_t>(kFrameHeader + n));
    return message;
  }

  Msk export_keying_material() override {
    Msk msk{};
    if (SSL_export_keying_material(ssl_.get(), msk.data(), msk.size(), kMskExporterLabel,
                                   std::strlen(kMskExporterLabel), nullptr, 0, 0) != 1) {
      ossl::fail(Errc::NotEstablished, "SSL_export_keying_material");
    }
    return msk;
  }

  std::optional<Certificate> peer_certificate() const override {
    X509* peer = SSL_get_peer_certificate(ssl_.get());
    if (!peer) return std::nullopt;
    return Certificate(std::shared_ptr<X509>(peer, X509_free));
  }

  bool peer_authenticated() const override {
    X509* peer = SSL_get_peer_certificate(ssl_.get());
    if (!peer) return false;
    X509_free(peer);
    return SSL_get_verify_result(ssl_.get()) == X509_V_OK;
  }

  bool resumed() const override { return SSL_session_reused(ssl_.get()) != 0; }

 private:
  static int client_status_cb(SSL* ssl, void* arg) {
    auto* self = static_cast<OpenSslEngine*>(arg);
    const unsigned char* resp = nullptr;
    long len = SSL_get_tlsext_status_ocsp_resp(ssl, &resp);
    if (resp == nullptr || len <= 0) {
      if (!self->cfg_.require_stapled_status) return 1;
      self->status_failure_ = FailureReason::StatusMissing;
      self->status_detail_ = "server did not staple a revocation status";
      return 0;
    }
    try {
      STACK_OF(X509)* verified = SSL_get0_verified_chain(ssl);
      std::vector<Certificate> chain;
      for (int i = 0; verified && i < sk_X509_num(verified); ++i) {
        X509* x = sk_X509_value(verified, i);
        X509_up_ref(x);
        chain.emplace_back(std::shared_ptr<X509>(x, X509_free));
      }
      if (chain.empty()) throw Error(Errc::StatusUnavailable, "no verified chain");
      auto status = check_stapled_status(ByteView(resp, static_cast<std::size_t>(len)),
                                         chain.front(), chain, self->cfg_.trust_anchors,
                                         self->clock_.now());
      if (status == CertStatus::Good) return 1;
      self->status_failure_ = status == CertStatus::Revoked ? FailureReason::StatusRevoked
                                                            : FailureReason::StatusInvalid;
      self->status_detail_ = status == CertStatus::Revoked ? "server certificate revoked"
                                                           : "server certificate status unknown";
    } catch (const Error& e) {
      self->status_failure_ = FailureReason::StatusInvalid;
      self->status_detail_ = e.what();
    }
    return 0;
  }

  static int server_status_cb(SSL* ssl, void* arg) {
    auto* self = static_cast<OpenSslEngine*>(arg);
    try {
      auto status = staple_status(*self->cfg_.status_provider, self->cfg_.own_chain);
      auto* copy = static_cast<unsigned char*>(OPENSSL_malloc(status.der.size()));
      if (!copy) return SSL_TLSEXT_ERR_ALERT_FATAL;
      std::memcpy(copy, status.der.data(), status.der.size());
      SSL_set_tlsext_status_ocsp_resp(ssl, copy, static_cast<long>(status.der.size()));
      return SSL_TLSEXT_ERR_OK;
    } catch (const Error&) {
      return SSL_TLSEXT_ERR_NOACK;
    }
  }

  TunnelConfig cfg_;
  const Clock& clock_;
  ossl::SslCtxPtr ctx_;
  ossl::SslPtr ssl_;
  BIO* rbio_ = nullptr;  // owned by ssl_
  BIO* wbio_ = nullptr;
  Bytes inbound_;
  FailureReason status_failure_ = FailureReason::None;
  std::string status_detail_;
};

}  // namespace

std::unique_ptr<HandshakeEngine> make_openssl_engine(const TunnelConfig& config) {
  return std::make_unique<OpenSslEngine>(config);
}

TunnelSession::TunnelSession(TunnelRole role, std::unique_ptr<HandshakeEngine> engine)
    : role_(role), engine_(std::move(engine)) {}

TunnelSession::TunnelSession(TunnelSession&&) noexcept = default;
TunnelSession& TunnelSession::operator=(TunnelSession&&) noexcept = default;
TunnelSession::~TunnelSession() = default;

std::pair<TunnelSession, Bytes> TunnelSession::start(const TunnelConfig& config,
                                                     const EngineFactory& factory) {
  config.validate();
  auto engine = factory ? factory(config) : make_openssl_engine(config);
  if (!engine) throw Error(Errc::ConfigError, "engine factory returned nothing");
  TunnelSession session(config.role, std::move(engine));
  session.offered_client_cert_ =
      config.role == TunnelRole::Client && config.client_auth == ClientAuth::Offered;
  Bytes initial = session.engine_->start();
  return {std::move(session), std::move(initial)};
}

DriveResult TunnelSession::drive(ByteView inbound) {
  if (state_ != TunnelState::Handshaking) {
    throw Error(Errc::InvariantViolation, "drive() after the handshake finished");
  }
  auto result = engine_->drive(inbound);
  for (const auto& ev : result.events) {
    if (ev.kind == TunnelEvent::Kind::HandshakeFailed) {
      state_ = TunnelState::Failed;
      failure_ = ev.reason;
      return result;
    }
  }
  if (!result.has(TunnelEvent::Kind::Established)) return result;

  if (engine_->resumed()) {
    state_ = TunnelState::Failed;
    failure_ = FailureReason::ResumptionAttempted;
    result.events = {{TunnelEvent::Kind::HandshakeFailed, failure_, "session was resumed"}};
    return result;
  }
  state_ = TunnelState::Established;
  peer_certificate_ = engine_->peer_certificate();
  msk_ = engine_->export_keying_material();
  if (role_ == TunnelRole::Server) {
    client_authenticated_ = engine_->peer_authenticated();
    const bool reported = result.has(TunnelEvent::Kind::PeerUnauthenticated);
    if (!client_authenticated_ && !reported) {
      result.events.push_back({TunnelEvent::Kind::PeerUnauthenticated, FailureReason::None,
                               peer_certificate_ ? "client certificate rejected"
                                                 : "no client certificate"});
    }
  } else {
    // The client only knows what it presented; the server's view decides.
    client_authenticated_ = offered_client_cert_;
  }
  return result;
}

void TunnelSession::require_established() const {
  if (state_ != TunnelState::Established) throw Error(Errc::NotEstablished);
}

Bytes TunnelSession::seal(ByteView plaintext) {
  require_established();
  return engine_->seal(plaintext);
}

Bytes TunnelSession::open(ByteView records) {
  require_established();
  return engine_->open(records);
}

Msk TunnelSession::export_msk() const {
  require_established();
  return *msk_;
}

}  // namespace eapsh
