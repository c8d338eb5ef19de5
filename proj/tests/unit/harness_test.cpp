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

#include "eapsh/harness.hpp"
#include "eapsh/http.hpp"
#include "test_support.hpp"

namespace eapsh {
namespace {

HarnessOptions options() {
  HarnessOptions o;
  o.assets_dir = EAPSH_TEST_ASSETS_DIR;
  return o;
}

TEST(Harness, ScenarioNames) {
  for (auto s : all_scenarios()) EXPECT_EQ(parse_scenario(to_string(s)), s);
  EXPECT_FALSE(parse_scenario("enrol"));
  EXPECT_EQ(all_scenarios().size(), 6u);
}

TEST(Harness, EnrollGolden) {
  auto r = run_scenario(Scenario::Enroll, options());
  ASSERT_EQ(r.outcome, Outcome::Success) << r.detail;
  EXPECT_TRUE(r.msk_match);
  EXPECT_TRUE(expected_outcome(r));
  // Frame counts follow the size of assets/portal/index.html.
  EXPECT_EQ(r.counters.frames, 39u);
  EXPECT_EQ(r.counters.fragments, 16u);
  EXPECT_EQ(r.counters.s_frames, 1u);
  EXPECT_EQ(r.counters.h_frames, 2u);
  EXPECT_EQ(r.counters.c_frames, 4u);
  EXPECT_EQ(r.counters.portal_requests, 2u);
  EXPECT_EQ(r.counters.browser_requests, 2u);
  EXPECT_EQ(r.counters.certificates_issued, 1u);
  EXPECT_EQ(r.transcript.count_flag('S'), 1u);
  EXPECT_EQ(r.transcript.count_kind("success"), 1u);
  EXPECT_EQ(r.transcript.count_kind("msk"), 1u);
  EXPECT_EQ(r.as_fallback_reason, "client presented no acceptable certificate");
  EXPECT_TRUE(r.timings.csr_generation);
  EXPECT_TRUE(r.timings.issuance);
  EXPECT_TRUE(isolation_violations(r).empty());
  EXPECT_FALSE(contains(r.delivered_to_browser, std::string(http::kUsernameHeader)));
  EXPECT_FALSE(contains(r.browser_received, std::string(http::kUsernameHeader)));
  EXPECT_TRUE(contains(r.browser_received, "Welcome, alice"));
  EXPECT_EQ(r.local_endpoint_url.rfind("http://127.", 0), 0u);

  auto events = Transcript::parse_jsonl(r.transcript.to_jsonl());
  EXPECT_EQ(events.size(), r.transcript.size());
  for (const auto& e : events) {
    if (e.kind == "request" || e.kind == "response") EXPECT_LE(e.size, 1020u);
  }
}

TEST(Harness, Reauth) {
  auto r = run_scenario(Scenario::Reauth, options());
  ASSERT_EQ(r.outcome, Outcome::Success) << r.detail;
  EXPECT_TRUE(r.msk_match);
  EXPECT_EQ(r.setup_attempts, 1);
  EXPECT_EQ(r.counters.h_frames, 0u);
  EXPECT_EQ(r.counters.c_frames, 0u);
  EXPECT_EQ(r.counters.s_frames, 0u);
  EXPECT_EQ(r.counters.portal_requests, 0u);
  EXPECT_EQ(r.counters.certificates_issued, 0u);
  EXPECT_EQ(r.counters.frames, 15u);
  EXPECT_TRUE(r.as_fallback_reason.empty());
  EXPECT_TRUE(r.local_endpoint_url.empty());
  EXPECT_TRUE(isolation_violations(r).empty());
}

TEST(Harness, BadPassword) {
  auto r = run_scenario(Scenario::BadPassword, options());
  ASSERT_EQ(r.outcome, Outcome::Success) << r.detail;
  EXPECT_TRUE(r.msk_match);
  EXPECT_EQ(r.counters.portal_requests, 4u);
  EXPECT_TRUE(contains(r.browser_received, "Wrong username or password"));
  EXPECT_FALSE(contains(r.browser_received, "not-the-password"));
}

TEST(Harness, ExpiredCert) {
  auto r = run_scenario(Scenario::ExpiredCert, options());
  ASSERT_EQ(r.outcome, Outcome::Success) << r.detail;
  EXPECT_TRUE(r.msk_match);
  EXPECT_EQ(r.counters.s_frames, 1u);
  EXPECT_EQ(r.counters.certificates_issued, 1u);
  EXPECT_FALSE(r.as_fallback_reason.empty());
}

TEST(Harness, Impersonation) {
  auto r = run_scenario(Scenario::Impersonation, options());
  EXPECT_EQ(r.outcome, Outcome::Failure);
  EXPECT_FALSE(r.msk_match);
  EXPECT_EQ(r.error, Errc::StalePseudonym);
  EXPECT_EQ(r.counters.certificates_issued, 0u);
  EXPECT_EQ(r.transcript.count_kind("failure"), 1u);
  EXPECT_EQ(r.transcript.count_kind("msk"), 0u);
  EXPECT_TRUE(expected_outcome(r));
  EXPECT_TRUE(isolation_violations(r).empty());
}

TEST(Harness, RestartAs) {
  auto r = run_scenario(Scenario::RestartAs, options());
  ASSERT_EQ(r.outcome, Outcome::Success) << r.detail;
  EXPECT_TRUE(r.msk_match);
  EXPECT_NE(r.as_fallback_reason.find("IntegrityFailure"), std::string::npos);
  EXPECT_EQ(r.counters.s_frames, 1u);
  EXPECT_EQ(r.counters.certificates_issued, 1u);
}

TEST(Harness, IsolationCheckerFlagsStrayIo) {
  ScenarioResult r;
  r.local_endpoint_url = "http://127.9.9.9:4000/";
  r.io.push_back({IoRecord::Channel::Eap, IoRecord::Op::Send, "", "", 10, true});
  r.io.push_back({IoRecord::Channel::Browser, IoRecord::Op::Accept, "127.9.9.9:4000",
                  "127.0.0.1:5555", 0, true});
  EXPECT_TRUE(isolation_violations(r).empty());
  r.io.push_back({IoRecord::Channel::Other, IoRecord::Op::Connect, "", "10.0.0.1:80", 0, true});
  r.io.push_back({IoRecord::Channel::Browser, IoRecord::Op::Accept, "127.1.1.1:4000",
                  "127.0.0.1:5555", 0, true});
  r.io.push_back({IoRecord::Channel::Other, IoRecord::Op::Connect, "", "10.0.0.1:80", 0, false});
  EXPECT_EQ(isolation_violations(r).size(), 2u);
}

TEST(Harness, FormEncode) {
  EXPECT_EQ(form_encode({{"uname", "a b"}, {"hpsw", "x&y=z"}}), "uname=a+b&hpsw=x%26y%3Dz");
}

}  // namespace
}  // namespace eapsh
