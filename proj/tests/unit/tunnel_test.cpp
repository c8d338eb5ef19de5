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

#include <gtest/gtest.h>

#include "eapsh/error.hpp"
#include "eapsh/tunnel.hpp"
#include "test_support.hpp"

namespace eapsh {
namespace {

using testing::shared_pki;

class Revoking : public StatusProvider {
 public:
  explicit Revoking(const Clock& clock)
      : inner_(shared_pki().intermediate, shared_pki().intermediate_key, clock,
               CertStatus::Revoked) {}
  StapledStatus staple(const std::vector<Certificate>& chain) override {
    return inner_.staple(chain);
  }

 private:
  StubStatusProvider inner_;
};

class Silent : public StatusProvider {
 public:
  StapledStatus staple(const std::vector<Certificate>&) override {
    throw Error(Errc::StatusUnavailable, "offline");
  }
};

class TunnelTest : public ::testing::Test {
 protected:
  TunnelTest() : clock_(std::chrono::system_clock::now()) {
    const auto& fx = shared_pki();
    server_.role = TunnelRole::Server;
    server_.own_chain = fx.server_chain();
    server_.own_key = fx.server_key;
    server_.client_auth = ClientAuth::Requested;
    server_.trust_anchors = {fx.intermediate};
    server_.status_provider =
        std::make_shared<StubStatusProvider>(fx.intermediate, fx.intermediate_key, clock_);
    server_.clock = &clock_;
    client_.role = TunnelRole::Client;
    client_.trust_anchors = {fx.root};
    client_.clock = &clock_;
  }

  struct Pair {
    TunnelSession client;
    TunnelSession server;
    std::vector<TunnelEvent> client_events;
    std::vector<TunnelEvent> server_events;
  };

  Pair handshake() {
    auto [client, hello] = TunnelSession::start(client_);
    auto [server, none] = TunnelSession::start(server_);
    EXPECT_TRUE(none.empty());
    Pair p{std::move(client), std::move(server), {}, {}};
    Bytes to_server = hello;
    for (int i = 0; i < 8; ++i) {
      if (p.server.state() == TunnelState::Handshaking) {
        auto r = p.server.drive(to_server);
        p.server_events.insert(p.server_events.end(), r.events.begin(), r.events.end());
        if (p.client.state() != TunnelState::Handshaking) break;
        auto q = p.client.drive(r.outbound);
        p.client_events.insert(p.client_events.end(), q.events.begin(), q.events.end());
        to_server = q.outbound;
      }
      if (p.server.state() != TunnelState::Handshaking &&
          p.client.state() != TunnelState::Handshaking) {
        break;
      }
    }
    return p;
  }

  Certificate user_cert(const KeyPair& key, SystemTime at) {
    return issue_certificate(shared_pki().issuer(), build_csr(key, "p-user"), at);
  }

  ManualClock clock_;
  TunnelConfig server_;
  TunnelConfig client_;
};

bool has(const std::vector<TunnelEvent>& evs, TunnelEvent::Kind k) {
  for (const auto& e : evs) {
    if (e.kind == k) return true;
  }
  return false;
}

TEST_F(TunnelTest, AnonymousClient) {
  auto p = handshake();
  ASSERT_EQ(p.client.state(), TunnelState::Established);
  ASSERT_EQ(p.server.state(), TunnelState::Established);
  EXPECT_FALSE(p.server.client_authenticated());
  EXPECT_TRUE(has(p.server_events, TunnelEvent::Kind::PeerUnauthenticated));
  EXPECT_EQ(p.client.export_msk(), p.server.export_msk());
  ASSERT_TRUE(p.client.peer_certificate());
  EXPECT_EQ(*p.client.peer_certificate(), shared_pki().server);
}

TEST_F(TunnelTest, CertificateClient) {
  auto key = KeyPair::generate(2048);
  client_.own_chain = {user_cert(key, clock_.now())};
  client_.own_key = key;
  client_.client_auth = ClientAuth::Offered;
  auto p = handshake();
  ASSERT_EQ(p.server.state(), TunnelState::Established);
  EXPECT_TRUE(p.server.client_authenticated());
  EXPECT_TRUE(p.client.client_authenticated());
  ASSERT_TRUE(p.server.peer_certificate());
  EXPECT_EQ(p.server.peer_certificate()->subject_common_name(), "p-user");
  EXPECT_EQ(p.client.export_msk(), p.server.export_msk());
}

TEST_F(TunnelTest, ExpiredClientCertFallsBack) {
  auto key = KeyPair::generate(2048);
  client_.own_chain = {user_cert(key, clock_.now() - std::chrono::hours(48))};
  client_.own_key = key;
  client_.client_auth = ClientAuth::Offered;
  auto p = handshake();
  ASSERT_EQ(p.server.state(), TunnelState::Established);
  EXPECT_FALSE(p.server.client_authenticated());
  EXPECT_EQ(p.client.export_msk(), p.server.export_msk());
}

TEST_F(TunnelTest, UntrustedServer) {
  auto other_key = KeyPair::generate(2048);
  client_.trust_anchors = {make_self_signed_ca(other_key, "Other", clock_.now(), std::chrono::hours(1))};
  auto p = handshake();
  EXPECT_EQ(p.client.state(), TunnelState::Failed);
  EXPECT_EQ(p.client.failure_reason(), FailureReason::UnknownAuthority);
}

TEST_F(TunnelTest, RevokedStaple) {
  server_.status_provider = std::make_shared<Revoking>(clock_);
  auto p = handshake();
  EXPECT_EQ(p.client.state(), TunnelState::Failed);
  EXPECT_EQ(p.client.failure_reason(), FailureReason::StatusRevoked);
}

TEST_F(TunnelTest, MissingStaple) {
  server_.status_provider = std::make_shared<Silent>();
  auto p = handshake();
  EXPECT_EQ(p.client.state(), TunnelState::Failed);
  EXPECT_EQ(p.client.failure_reason(), FailureReason::StatusMissing);

  client_.require_stapled_status = false;
  auto q = handshake();
  EXPECT_EQ(q.client.state(), TunnelState::Established);
}

TEST_F(TunnelTest, SessionsExportDistinctKeys) {
  auto a = handshake();
  auto b = handshake();
  EXPECT_NE(a.client.export_msk(), b.client.export_msk());
}

TEST_F(TunnelTest, SealOpen) {
  auto p = handshake();
  auto msg = testing::pattern(5000);
  EXPECT_EQ(p.server.open(p.client.seal(msg)), msg);
  EXPECT_EQ(p.client.open(p.server.seal(msg)), msg);

  auto sealed = p.client.seal(to_bytes("secret"));
  sealed[sealed.size() - 3] ^= 0x40;
  try {
    p.server.open(sealed);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::IntegrityFailure);
  }
}

TEST_F(TunnelTest, NotEstablishedGuards) {
  auto [client, hello] = TunnelSession::start(client_);
  EXPECT_FALSE(hello.empty());
  try {
    client.seal(to_bytes("x"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotEstablished);
  }
  EXPECT_THROW(client.export_msk(), Error);
}

TEST_F(TunnelTest, ConfigValidation) {
  TunnelConfig c;
  c.role = TunnelRole::Client;
  EXPECT_THROW(c.validate(), Error);
  TunnelConfig s = server_;
  s.own_key.reset();
  EXPECT_THROW(TunnelSession::start(s), Error);
  TunnelConfig r = client_;
  r.allow_resumption = true;
  EXPECT_THROW(r.validate(), Error);
}

TEST_F(TunnelTest, StapleChecks) {
  const auto& fx = shared_pki();
  StubStatusProvider good(fx.intermediate, fx.intermediate_key, clock_);
  auto st = good.staple(fx.server_chain());
  EXPECT_EQ(check_stapled_status(st.der, fx.server, fx.server_chain(), {fx.root}, clock_.now()),
            CertStatus::Good);
  EXPECT_THROW(check_stapled_status(st.der, fx.server, fx.server_chain(), {fx.root},
                                    clock_.now() + std::chrono::hours(3)),
               Error);
  EXPECT_THROW(check_stapled_status(Bytes{1, 2, 3}, fx.server, fx.server_chain(), {fx.root},
                                    clock_.now()),
               Error);
}

}  // namespace
}  // namespace eapsh
