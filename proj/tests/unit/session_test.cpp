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

#include "eapsh/auth_server.hpp"
#include "eapsh/error.hpp"
#include "eapsh/http.hpp"
#include "eapsh/supplicant.hpp"
#include "session_pump.hpp"
#include "test_support.hpp"

namespace eapsh {
namespace {

using testing::fake_portal;
using testing::kLoginRequest;
using testing::kPageRequest;
using testing::shared_pki;

class SessionTest : public ::testing::Test {
 protected:
  using Run = testing::PumpRun;

  SessionTest() : clock_(std::chrono::system_clock::now()), settings_(default_settings()) {
    save_chain(dir_ / "ca.pem", std::vector<Certificate>{shared_pki().root});
    config_.ca_path = dir_ / "ca.pem";
    config_.client_cert = dir_ / "user.pem";
    config_.private_key = dir_ / "user.key";
    config_.private_key_password = "pw";
  }

  static AsSettings default_settings() {
    const auto& fx = shared_pki();
    return AsSettings{fx.server_chain(), fx.server_key, {fx.intermediate}, fx.issuer(),
                      {"127.0.0.1", 9}};
  }

  AuthServer make_server(PortalRelay relay = fake_portal) {
    AuthServerOptions o;
    o.clock = &clock_;
    o.relay = std::move(relay);
    return AuthServer(settings_, std::move(o));
  }

  SupplicantSession make_supplicant(SupplicantOptions o = {}) {
    o.clock = &clock_;
    return SupplicantSession(config_, std::move(o));
  }

  Run pump(SupplicantSession& s, AsSession& a, std::vector<std::string> browser,
           std::function<EapShFrame(EapShFrame)> rewrite = {}) {
    return testing::pump(s, a, std::move(browser), std::move(rewrite));
  }

  ManualClock clock_;
  testing::TempDir dir_;
  AsSettings settings_;
  SupplicantConfig config_;
};

TEST_F(SessionTest, FullEnrollment) {
  auto server = make_server();
  auto s = make_supplicant();
  EXPECT_FALSE(s.credentials());
  auto a = server.new_session();
  auto run = pump(s, *a, {kPageRequest, kLoginRequest});

  ASSERT_TRUE(run.decision);
  EXPECT_EQ(run.decision->kind, AsDecision::Kind::Success) << run.decision->detail;
  EXPECT_EQ(run.decision->identity, "alice");
  ASSERT_TRUE(s.done());
  EXPECT_EQ(*s.msk(), *run.decision->msk);
  EXPECT_EQ(s.round(), 1);
  EXPECT_EQ(a->round(), 1);
  EXPECT_EQ(server.stats().certificates_issued, 1u);
  EXPECT_EQ(server.stats().portal_requests, 2u);

  ASSERT_FALSE(run.actions.empty());
  EXPECT_TRUE(std::holds_alternative<LaunchBrowser>(run.actions.front()));
  bool closed = false;
  for (auto& act : run.actions) closed |= std::holds_alternative<CloseLocalEndpoint>(act);
  EXPECT_TRUE(closed);
  EXPECT_FALSE(contains(run.delivered, "X-username"));
  EXPECT_TRUE(contains(run.delivered, "welcome"));
  EXPECT_TRUE(s.timings().csr_generation);

  EXPECT_TRUE(std::filesystem::exists(config_.client_cert));
  auto creds = load_credentials(config_);
  ASSERT_TRUE(creds);
  EXPECT_EQ(creds->chain.front().public_der(), creds->key.public_der());
  EXPECT_EQ(server.resolve(creds->chain.front().subject_common_name()), "alice");
  EXPECT_THROW(KeyPair::load(config_.private_key, "not-pw"), Error);
}

TEST_F(SessionTest, ReauthSkipsPhase2) {
  auto server = make_server();
  {
    auto s = make_supplicant();
    auto a = server.new_session();
    ASSERT_EQ(pump(s, *a, {kLoginRequest}).decision->kind, AsDecision::Kind::Success);
  }
  auto s = make_supplicant();
  ASSERT_TRUE(s.credentials());
  auto a = server.new_session();
  auto run = pump(s, *a, {});
  ASSERT_TRUE(run.decision);
  EXPECT_EQ(run.decision->kind, AsDecision::Kind::Success);
  EXPECT_TRUE(run.actions.empty());
  EXPECT_EQ(s.round(), 0);
  EXPECT_EQ(server.stats().portal_requests, 1u);
}

TEST_F(SessionTest, NoLoginHeaderKeepsRelaying) {
  auto server = make_server();
  auto s = make_supplicant();
  auto a = server.new_session();
  auto run = pump(s, *a, {kPageRequest, kPageRequest});
  EXPECT_FALSE(run.decision);
  EXPECT_TRUE(s.awaiting_browser());
  EXPECT_EQ(s.phase(), SupplicantPhase::Phase2Http);
  EXPECT_EQ(a->phase(), AsPhase::Phase2);
  EXPECT_EQ(server.stats().certificates_issued, 0u);
}

TEST_F(SessionTest, PortalDownGives502) {
  auto server = make_server([](ByteView) -> Bytes {
    throw Error(Errc::PortalUnreachable, "connection refused");
  });
  auto s = make_supplicant();
  auto a = server.new_session();
  auto run = pump(s, *a, {kPageRequest});
  EXPECT_EQ(http::status_code(run.delivered), 502);
  EXPECT_TRUE(s.awaiting_browser());
  EXPECT_EQ(server.stats().portal_failures, 1u);
}

TEST_F(SessionTest, ForeignCsrNameRejected) {
  auto server = make_server();
  SupplicantOptions o;
  o.csr_name_override = [](const std::string&) { return std::string("p-never-issued"); };
  auto s = make_supplicant(std::move(o));
  auto a = server.new_session();
  auto run = pump(s, *a, {kLoginRequest});
  ASSERT_TRUE(run.decision);
  EXPECT_EQ(run.decision->kind, AsDecision::Kind::Failure);
  EXPECT_EQ(run.decision->reason, Errc::StalePseudonym);
  EXPECT_EQ(server.stats().certificates_issued, 0u);
  EXPECT_FALSE(s.done());
}

TEST_F(SessionTest, StalePseudonymRejected) {
  auto server = make_server();
  SupplicantOptions o;
  o.csr_name_override = [this](const std::string& cn) {
    clock_.advance(std::chrono::seconds(61));
    return cn;
  };
  auto s = make_supplicant(std::move(o));
  auto a = server.new_session();
  auto run = pump(s, *a, {kLoginRequest});
  ASSERT_TRUE(run.decision);
  EXPECT_EQ(run.decision->reason, Errc::StalePseudonym);
}

TEST_F(SessionTest, RestartedServerForcesEnrollment) {
  auto server = make_server();
  {
    auto s = make_supplicant();
    auto a = server.new_session();
    ASSERT_EQ(pump(s, *a, {kLoginRequest}).decision->kind, AsDecision::Kind::Success);
  }
  server.regenerate_pseudonym_key();
  auto s = make_supplicant();
  auto a = server.new_session();
  auto run = pump(s, *a, {kLoginRequest});
  ASSERT_TRUE(run.decision);
  EXPECT_EQ(run.decision->kind, AsDecision::Kind::Success);
  EXPECT_NE(a->fallback_reason().find("IntegrityFailure"), std::string::npos);
  EXPECT_EQ(server.stats().certificates_issued, 2u);
}

TEST_F(SessionTest, AsRejectsGarbage) {
  auto server = make_server();
  auto a = server.new_session();
  a->begin();
  EapShFrame junk;
  junk.header.code = EapCode::Response;
  junk.flags.cert = true;
  junk.payload = to_bytes("not in phase 2");
  auto out = a->step(junk);
  ASSERT_TRUE(out.decision);
  EXPECT_EQ(out.decision->kind, AsDecision::Kind::Failure);
  EXPECT_EQ(out.frame->header.code, EapCode::Failure);
  EXPECT_TRUE(a->finished());
}

TEST_F(SessionTest, SupplicantRejectsOutOfPhaseFrames) {
  auto s = make_supplicant();
  EapShFrame cert;
  cert.header.code = EapCode::Request;
  cert.flags.cert = true;
  cert.payload = {1, 2, 3};
  try {
    s.step(cert);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ProtocolViolation);
  }
  EXPECT_TRUE(s.failed());
}

TEST_F(SessionTest, ServerRefusesSecondEnrollment) {
  auto other = KeyPair::generate(1024);
  settings_.client_anchors = {
      make_self_signed_ca(other, "Unrelated", clock_.now(), std::chrono::hours(1))};
  auto server = make_server();
  auto s = make_supplicant();
  auto a = server.new_session();
  auto run = pump(s, *a, {kLoginRequest, kLoginRequest});
  ASSERT_TRUE(run.decision);
  EXPECT_EQ(run.decision->kind, AsDecision::Kind::Failure);
  EXPECT_EQ(a->round(), 1);
  EXPECT_EQ(server.stats().certificates_issued, 1u);
}

TEST_F(SessionTest, SupplicantRefusesSecondStart) {
  auto other = KeyPair::generate(1024);
  settings_.client_anchors = {
      make_self_signed_ca(other, "Unrelated", clock_.now(), std::chrono::hours(1))};
  auto server = make_server();
  auto s = make_supplicant();
  auto a = server.new_session();
  auto run = pump(s, *a, {kLoginRequest}, [&](EapShFrame f) {
    if (s.round() == 1 && f.header.code == EapCode::Failure) {
      return EapShFrame::start_request(f.header.identifier);
    }
    return f;
  });
  EXPECT_TRUE(s.failed());
  EXPECT_FALSE(s.done());
}

TEST_F(SessionTest, CertificateForAnotherKeyRefused) {
  auto s = make_supplicant();
  auto k = KeyPair::generate(1024);
  auto cert = issue_certificate(shared_pki().issuer(), build_csr(k, "p-x"), clock_.now());
  try {
    s.install_and_restart(chain_to_der(std::vector<Certificate>{cert}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(e.code() == Errc::CertMismatch || e.code() == Errc::InvariantViolation);
  }
}

TEST(AsHelpers, RewriteUsernameHeader) {
  auto key = PseudonymKey::generate();
  PseudonymCache cache;
  const auto now = std::chrono::system_clock::now();
  auto resp = to_bytes("HTTP/1.1 200 OK\r\nX-username: alice\r\nContent-Length: 2\r\n\r\nok");
  auto r = rewrite_username_header(resp, key, cache, now);
  ASSERT_TRUE(r.issued);
  EXPECT_EQ(resolve_pseudonym(*r.issued, key), "alice");
  EXPECT_EQ(http::find_header(r.response, "X-username"), r.issued->text);
  EXPECT_FALSE(contains(r.response, "alice"));
  EXPECT_EQ(cache.size(), 1u);

  auto plain = to_bytes("HTTP/1.1 200 OK\r\nContent-Length: 2\r\n\r\nok");
  auto none = rewrite_username_header(plain, key, cache, now);
  EXPECT_FALSE(none.issued);
  EXPECT_EQ(none.response, plain);
}

TEST(AsHelpers, HandleCsr) {
  const auto& fx = shared_pki();
  auto key = PseudonymKey::generate();
  PseudonymCache cache;
  const auto now = std::chrono::system_clock::now();
  auto p = generate_pseudonym("alice", key);
  cache.insert(p, now);
  auto k = KeyPair::generate(1024);
  auto csr = build_csr(k, p.text).der();
  auto cert = handle_csr(csr, cache, fx.issuer(), now + std::chrono::seconds(10));
  EXPECT_EQ(cert.subject_common_name(), p.text);
  try {
    handle_csr(csr, cache, fx.issuer(), now + std::chrono::seconds(11));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::StalePseudonym);
  }
  try {
    handle_csr(Bytes{0x30, 0x01}, cache, fx.issuer(), now);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::BadCsr);
  }
}

TEST(AsHelpers, RelayToClosedPort) {
  try {
    relay_to_portal(to_bytes(kPageRequest), {"127.0.0.1", 1}, std::chrono::milliseconds(500));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::PortalUnreachable);
  }
}

}  // namespace
}  // namespace eapsh
