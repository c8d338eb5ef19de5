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

#include <chrono>
#include <cstdio>
#include <map>
#include <string>

#include "eapsh/auth_server.hpp"
#include "eapsh/harness.hpp"
#include "eapsh/pki.hpp"
#include "eapsh/supplicant.hpp"
#include "properties.hpp"
#include "session_pump.hpp"
#include "test_support.hpp"

namespace eapsh {
namespace {

using std::chrono::duration_cast;
using std::chrono::milliseconds;

HarnessOptions options(std::uint64_t seed = 1) {
  HarnessOptions o;
  o.assets_dir = EAPSH_TEST_ASSETS_DIR;
  o.seed = seed;
  return o;
}

struct Timed {
  ScenarioResult result;
  milliseconds wall{0};
};

// One run per scenario, shared by every criterion that inspects it.
const Timed& scenario(Scenario s) {
  static std::map<Scenario, Timed> cache;
  auto it = cache.find(s);
  if (it == cache.end()) {
    const auto t0 = std::chrono::steady_clock::now();
    auto r = run_scenario(s, options());
    const auto wall = duration_cast<milliseconds>(std::chrono::steady_clock::now() - t0);
    it = cache.emplace(s, Timed{std::move(r), wall}).first;
  }
  return it->second;
}

double ms(std::chrono::microseconds us) { return static_cast<double>(us.count()) / 1000.0; }

class Acceptance : public ::testing::Test {
 protected:
  Acceptance() : clock_(std::chrono::system_clock::now()) {}

  SupplicantConfig config_in(const testing::TempDir& dir) {
    const auto& fx = testing::shared_pki();
    save_chain(dir / "ca.pem", std::vector<Certificate>{fx.root});
    SupplicantConfig c;
    c.ca_path = dir / "ca.pem";
    c.client_cert = dir / "user.pem";
    c.private_key = dir / "user.key";
    c.private_key_password = "pw";
    return c;
  }

  AuthServer make_server() {
    const auto& fx = testing::shared_pki();
    AuthServerOptions o;
    o.clock = &clock_;
    o.relay = testing::fake_portal;
    return AuthServer(AsSettings{fx.server_chain(), fx.server_key, {fx.intermediate}, fx.issuer(),
                                 {"127.0.0.1", 9}},
                      std::move(o));
  }

  ManualClock clock_;
};

TEST_F(Acceptance, Enrollment) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    SCOPED_TRACE("seed " + std::to_string(seed));
    const auto t0 = std::chrono::steady_clock::now();
    auto r = run_scenario(Scenario::Enroll, options(seed));
    const auto wall = duration_cast<milliseconds>(std::chrono::steady_clock::now() - t0);
    EXPECT_EQ(r.outcome, Outcome::Success) << r.detail;
    EXPECT_TRUE(r.msk_match);
    EXPECT_LT(wall, milliseconds(10000));
    EXPECT_EQ(r.counters.s_frames, 1u);
    EXPECT_EQ(r.counters.certificates_issued, 1u);
    EXPECT_GE(r.counters.portal_requests, 1u);
    EXPECT_GE(r.counters.c_frames, 2u);
    std::printf("  seed %llu: %s, msk_match=%d, %zu frames, %lld ms wall\n",
                static_cast<unsigned long long>(seed), to_string(r.outcome), r.msk_match,
                r.counters.frames, static_cast<long long>(wall.count()));
  }
}

TEST_F(Acceptance, Reauthentication) {
  const auto& r = scenario(Scenario::Reauth).result;
  EXPECT_EQ(r.outcome, Outcome::Success) << r.detail;
  EXPECT_TRUE(r.msk_match);
  EXPECT_EQ(r.counters.h_frames, 0u);
  EXPECT_EQ(r.counters.c_frames, 0u);
  EXPECT_EQ(r.counters.s_frames, 0u);
  EXPECT_EQ(r.counters.portal_requests, 0u);
  std::printf("  %zu frames, H=%zu C=%zu, portal requests %zu\n", r.counters.frames,
              r.counters.h_frames, r.counters.c_frames, r.counters.portal_requests);
}

TEST_F(Acceptance, CodecProperties) {
  auto r = testing::codec_property_suite(1000);
  for (const auto& f : r.failures) ADD_FAILURE() << f;
  EXPECT_GE(r.cases, 1000u + 3u);
  EXPECT_TRUE(r.ok());
  std::printf("  %zu cases, %zu failures\n", r.cases, r.failures.size());
}

TEST_F(Acceptance, PseudonymProperties) {
  auto r = testing::pseudonym_suite(1000);
  EXPECT_TRUE(r.oracle);
  for (const auto* part : {&r.round_trip, &r.uniqueness, &r.tamper}) {
    for (const auto& f : part->failures) ADD_FAILURE() << f;
    EXPECT_TRUE(part->ok());
  }
  EXPECT_GE(r.round_trip.cases, 1000u);
  EXPECT_GE(r.uniqueness.cases, 1000u);
  EXPECT_GE(r.tamper.cases, 52u);
  EXPECT_TRUE(r.accept_at_59);
  EXPECT_TRUE(r.reject_at_61);
  EXPECT_TRUE(r.single_use);
  std::printf("  oracle=%d round_trip=%zu uniqueness=%zu tamper=%zu 59s=%d 61s=%d single_use=%d\n",
              r.oracle, r.round_trip.cases, r.uniqueness.cases, r.tamper.cases, r.accept_at_59,
              r.reject_at_61, r.single_use);
}

TEST_F(Acceptance, ImpersonationDefense) {
  // A CN the AS never issued, end to end.
  const auto& r = scenario(Scenario::Impersonation).result;
  EXPECT_EQ(r.outcome, Outcome::Failure);
  EXPECT_EQ(r.error, Errc::StalePseudonym);
  EXPECT_EQ(r.counters.certificates_issued, 0u);
  EXPECT_FALSE(r.msk_match);

  // A CN that was issued and already spent on a certificate.
  auto server = make_server();
  testing::TempDir first_dir;
  auto first_cfg = config_in(first_dir);
  std::string spent;
  {
    SupplicantSession s(first_cfg, SupplicantOptions{.clock = &clock_});
    auto a = server.new_session();
    auto run = testing::pump(s, *a, {testing::kLoginRequest});
    ASSERT_TRUE(run.decision);
    ASSERT_EQ(run.decision->kind, AsDecision::Kind::Success);
    spent = load_credentials(first_cfg)->chain.front().subject_common_name();
  }
  testing::TempDir second_dir;
  SupplicantOptions o{.clock = &clock_};
  o.csr_name_override = [&](const std::string&) { return spent; };
  SupplicantSession s(config_in(second_dir), std::move(o));
  auto a = server.new_session();
  auto run = testing::pump(s, *a, {testing::kLoginRequest});
  ASSERT_TRUE(run.decision);
  EXPECT_EQ(run.decision->kind, AsDecision::Kind::Failure);
  EXPECT_EQ(run.decision->reason, Errc::StalePseudonym);
  EXPECT_FALSE(s.done());
  EXPECT_EQ(server.stats().certificates_issued, 1u);
  auto name = [](std::optional<Errc> e) { return std::string(e ? to_string(*e) : "-"); };
  std::printf("  never issued: %s; already consumed: %s\n", name(r.error).c_str(),
              name(run.decision->reason).c_str());
}

TEST_F(Acceptance, HeaderHygiene) {
  std::size_t checked = 0;
  for (auto s : all_scenarios()) {
    const auto& r = scenario(s).result;
    if (r.counters.h_frames == 0) continue;
    ++checked;
    EXPECT_FALSE(contains(r.delivered_to_browser, "X-username")) << to_string(s);
    EXPECT_FALSE(contains(r.browser_received, "X-username")) << to_string(s);
    EXPECT_FALSE(contains(r.delivered_to_browser, "x-username")) << to_string(s);
    EXPECT_FALSE(r.delivered_to_browser.empty()) << to_string(s);
  }
  EXPECT_GE(checked, 4u);
  std::printf("  %zu relaying transcripts checked\n", checked);
}

TEST_F(Acceptance, PreAuthIsolation) {
  for (auto s : all_scenarios()) {
    const auto& r = scenario(s).result;
    EXPECT_FALSE(r.io.empty()) << to_string(s);
    for (const auto& v : isolation_violations(r)) ADD_FAILURE() << to_string(s) << ": " << v;
  }
  std::printf("  %zu scenarios monitored\n", all_scenarios().size());
}

TEST_F(Acceptance, AsRestart) {
  // The regenerated key no longer opens a CN issued under the old one.
  auto server = make_server();
  testing::TempDir dir;
  auto cfg = config_in(dir);
  {
    SupplicantSession s(cfg, SupplicantOptions{.clock = &clock_});
    auto a = server.new_session();
    auto run = testing::pump(s, *a, {testing::kLoginRequest});
    ASSERT_TRUE(run.decision);
    ASSERT_EQ(run.decision->kind, AsDecision::Kind::Success);
  }
  const auto cn = load_credentials(cfg)->chain.front().subject_common_name();
  EXPECT_EQ(server.resolve(cn), "alice");
  server.regenerate_pseudonym_key();
  try {
    server.resolve(cn);
    ADD_FAILURE() << "old CN still resolves";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::IntegrityFailure);
  }

  // End to end: the cached certificate is refused and phase 2 runs again.
  const auto& r = scenario(Scenario::RestartAs).result;
  EXPECT_EQ(r.outcome, Outcome::Success) << r.detail;
  EXPECT_TRUE(r.msk_match);
  EXPECT_NE(r.as_fallback_reason.find("IntegrityFailure"), std::string::npos)
      << r.as_fallback_reason;
  EXPECT_EQ(r.counters.s_frames, 1u);
  EXPECT_GE(r.counters.h_frames, 1u);
  EXPECT_EQ(r.counters.certificates_issued, 1u);
  std::printf("  fallback: %s\n", r.as_fallback_reason.c_str());
}

// Informational: always passes once both figures are present.
TEST_F(Acceptance, TimingReport) {
  const auto& r = scenario(Scenario::Enroll).result;
  ASSERT_TRUE(r.timings.csr_generation);
  ASSERT_TRUE(r.timings.issuance);
  std::printf("  csr_generation_ms: %.3f\n  issuance_ms: %.3f\n  attempt_ms: %.3f\n",
              ms(*r.timings.csr_generation), ms(*r.timings.issuance), ms(r.timings.total));
}

// One verdict line per criterion, after gtest's own output for it.
class Verdicts : public ::testing::EmptyTestEventListener {
 public:
  void OnTestEnd(const ::testing::TestInfo& info) override {
    const bool ok = info.result()->Passed();
    std::printf("ACCEPTANCE %s: %s\n", info.name(), ok ? "PASS" : "FAIL");
    std::fflush(stdout);
    (ok ? passed_ : failed_)++;
  }
  void OnTestProgramEnd(const ::testing::UnitTest&) override {
    std::printf("ACCEPTANCE summary: %d passed, %d failed\n", passed_, failed_);
  }

 private:
  int passed_ = 0;
  int failed_ = 0;
};

}  // namespace
}  // namespace eapsh

int main(int argc, char** argv) {
  ::testing::InitGoogleTest(&argc, argv);
  ::testing::UnitTest::GetInstance()->listeners().Append(new eapsh::Verdicts);
  return RUN_ALL_TESTS();
}
