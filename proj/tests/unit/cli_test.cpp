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
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>

#include "eapsh/auth_server.hpp"
#include "eapsh/portal.hpp"
#include "eapsh/supplicant.hpp"
#include "eapsh/transcript.hpp"
#include "properties.hpp"
#include "test_support.hpp"

namespace eapsh {
namespace {

struct Run {
  int status = -1;
  std::string out;
};

Run cli(const std::string& args, const std::string& input = {}) {
  Run r;
  std::string cmd = std::string(EAPSH_CLI_PATH) + " " + args + " 2>&1";
  if (!input.empty()) cmd = "printf '%s\\n' '" + input + "' | " + cmd;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf;
  while (auto n = fread(buf.data(), 1, buf.size(), p)) r.out.append(buf.data(), n);
  const int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli("").status, 2);
  EXPECT_EQ(cli("frobnicate").status, 2);
  EXPECT_EQ(cli("sim").status, 2);
  EXPECT_EQ(cli("sim enrol").status, 2);
  EXPECT_EQ(cli("sim enroll --key-bits 512").status, 2);
  EXPECT_EQ(cli("--help").status, 0);
}

TEST(Cli, SimOutcomes) {
  auto ok = cli("sim enroll");
  EXPECT_EQ(ok.status, 0) << ok.out;
  EXPECT_NE(ok.out.find("outcome: Success"), std::string::npos);
  EXPECT_NE(ok.out.find("msk_match: true"), std::string::npos);
  EXPECT_NE(ok.out.find("csr_generation_ms: "), std::string::npos);

  auto bad = cli("sim impersonation");
  EXPECT_EQ(bad.status, 1) << bad.out;
  EXPECT_NE(bad.out.find("StalePseudonym"), std::string::npos);
}

TEST(Cli, SimTranscript) {
  testing::TempDir dir;
  auto r = cli("sim reauth --transcript " + (dir / "t.jsonl").string());
  ASSERT_EQ(r.status, 0) << r.out;
  std::ifstream in(dir / "t.jsonl");
  std::string text((std::istreambuf_iterator<char>(in)), {});
  auto events = Transcript::parse_jsonl(text);
  EXPECT_EQ(events.size(), 16u);
  for (const auto& e : events) {
    EXPECT_EQ(e.flags.find_first_of("HC"), std::string::npos);
  }
}

TEST(Cli, VectorsCheck) {
  auto r = cli("vectors check");
  EXPECT_EQ(r.status, 0) << r.out;
  testing::TempDir dir;
  std::ofstream(dir / "bad.hex") << "! x packet=010000063800 error=BadType\n";
  EXPECT_EQ(cli("vectors check --file " + (dir / "bad.hex").string()).status, 1);
  EXPECT_EQ(cli("vectors check --file " + (dir / "missing.hex").string()).status, 1);
}

TEST(Cli, PseudonymDemo) {
  auto r = cli("pseudonym demo --identity alice --key 00000000000000000000000000000000 "
               "--iv 00000000000000000000000000000000");
  EXPECT_EQ(r.status, 0) << r.out;
  EXPECT_NE(r.out.find(testing::kAliceZeroVector), std::string::npos);
  EXPECT_NE(r.out.find("first use at 59 s accepted, second use rejected"), std::string::npos);
  EXPECT_EQ(cli("pseudonym demo --key 00").status, 2);
}

TEST(Cli, PortalAddUser) {
  testing::TempDir dir;
  const auto users = (dir / "users.db").string();
  EXPECT_EQ(cli("portal add-user --users " + users + " --username alice --password s3cret").status,
            0);
  EXPECT_EQ(cli("portal add-user --users " + users + " --username bob --password-stdin", "hunter2")
                .status,
            0);
  auto store = UserStore::load(users);
  EXPECT_TRUE(store.verify("alice", "s3cret"));
  EXPECT_TRUE(store.verify("bob", "hunter2"));
  EXPECT_EQ(cli("portal add-user --users " + users + " --username carol").status, 2);
  EXPECT_EQ(cli("portal add-user --users " + users + " --username a:b --password x").status, 1);
}

TEST(Cli, PkiInit) {
  testing::TempDir dir;
  auto r = cli("pki init --out " + dir.path().string() + " --key-bits 1024 --password pw");
  ASSERT_EQ(r.status, 0) << r.out;
  auto settings = AsSettings::load(AsConfig::load(dir / "as.conf"));
  EXPECT_EQ(settings.server_chain.size(), 2u);
  EXPECT_EQ(settings.issuer.ca_chain.size(), 2u);
  auto root = Certificate::load_chain(dir / "root.pem").front();
  EXPECT_TRUE(root.self_signed());
  EXPECT_EQ(settings.issuer.ca_chain.back(), root);
  EXPECT_NO_THROW(validate_chain(settings.server_chain.front(), std::vector<Certificate>{root},
                                 std::chrono::system_clock::now(),
                                 std::vector<Certificate>{settings.server_chain[1]}));
  auto sc = SupplicantConfig::load(dir / "supplicant.conf");
  EXPECT_EQ(sc.ca_path, dir / "ca.pem");
  EXPECT_FALSE(load_credentials(sc));
}

TEST(Cli, MissingConfig) {
  EXPECT_EQ(cli("as serve --config /nonexistent/as.conf").status, 1);
  EXPECT_EQ(cli("supplicant run --config /nonexistent/s.conf").status, 1);
  EXPECT_EQ(cli("as serve").status, 2);
}

}  // namespace
}  // namespace eapsh
