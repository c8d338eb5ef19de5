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
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <thread>

#include "eapsh/harness.hpp"
#include "eapsh/live.hpp"
#include "eapsh/portal.hpp"
#include "test_support.hpp"

namespace eapsh {
namespace {

using namespace std::chrono_literals;
using testing::shared_pki;

struct Shape {
  std::string actor;
  std::string kind;
  std::string flags;
  bool operator==(const Shape&) const = default;
};

std::vector<Shape> shape(const Transcript& t) {
  std::vector<Shape> out;
  for (const auto& e : t.events()) out.push_back({e.actor, e.kind, e.flags});
  return out;
}

class LiveTest : public ::testing::Test {
 protected:
  LiveTest() {
    UserStore users;
    users.add("alice", "s3cret");
    portal_ = std::make_unique<CaptivePortal>(std::move(users), EAPSH_TEST_ASSETS_DIR);
    portal_->start({"127.0.0.1", 0});
    const auto& fx = shared_pki();
    save_chain(dir_ / "ca.pem", std::vector<Certificate>{fx.root});
    server_ = std::make_unique<AuthServer>(AsSettings{fx.server_chain(), fx.server_key,
                                                      {fx.intermediate}, fx.issuer(),
                                                      portal_->endpoint()});
    live_ = std::make_unique<LiveAuthServer>(*server_, HostPort{"127.0.0.1", 0});
    serve_ = std::thread([this] { live_->serve(stop_); });
    config_.ca_path = dir_ / "ca.pem";
    config_.client_cert = dir_ / "user.pem";
    config_.private_key = dir_ / "user.key";
    config_.private_key_password = "pw";
  }

  ~LiveTest() override {
    stop_ = true;
    serve_.join();
    portal_->stop();
  }

  SupplicantRunResult authenticate(IoRecorder* recorder = nullptr) {
    SupplicantSession session(config_);
    auto transport = TcpEapTransport::connect(live_->endpoint(), recorder);
    std::thread browser;
    SupplicantHostOptions o;
    o.recorder = recorder;
    o.launcher = [&browser](const LaunchBrowser& launch) {
      browser = std::thread([url = launch.url] {
        run_browser(url,
                    {{"GET", "/", ""},
                     {"POST", "/login", form_encode({{"uname", "alice"}, {"hpsw", "s3cret"}})}},
                    10s);
      });
    };
    SupplicantHost host(session, transport, std::move(o));
    auto r = host.run();
    if (browser.joinable()) browser.join();
    return r;
  }

  testing::TempDir dir_;
  std::unique_ptr<CaptivePortal> portal_;
  std::unique_ptr<AuthServer> server_;
  std::unique_ptr<LiveAuthServer> live_;
  std::atomic<bool> stop_{false};
  std::thread serve_;
  SupplicantConfig config_;
};

TEST_F(LiveTest, EnrollThenReauthOverLoopback) {
  IoRecorder io;
  auto first = authenticate(&io);
  ASSERT_TRUE(first.success) << first.detail;
  auto sessions = live_->sessions();
  ASSERT_EQ(sessions.size(), 1u);
  ASSERT_TRUE(sessions[0].msk);
  EXPECT_EQ(*sessions[0].msk, *first.msk);
  EXPECT_FALSE(contains(first.browser_bytes, "X-username"));
  EXPECT_EQ(portal_->request_count(), 2u);
  EXPECT_EQ(server_->stats().certificates_issued, 1u);

  auto second = authenticate();
  ASSERT_TRUE(second.success) << second.detail;
  EXPECT_NE(*second.msk, *first.msk);
  EXPECT_EQ(portal_->request_count(), 2u);
  EXPECT_EQ(server_->stats().certificates_issued, 1u);
}

TEST_F(LiveTest, SameShapeAsSimulation) {
  auto live = authenticate();
  ASSERT_TRUE(live.success) << live.detail;
  HarnessOptions o;
  o.assets_dir = EAPSH_TEST_ASSETS_DIR;
  auto sim = run_scenario(Scenario::Enroll, o);
  ASSERT_EQ(sim.outcome, Outcome::Success);
  EXPECT_EQ(shape(live_->transcript()), shape(sim.transcript));
}

TEST_F(LiveTest, SecondListenerOnSamePort) {
  try {
    LiveAuthServer again(*server_, live_->endpoint());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::PortInUse);
  }
}

TEST(LiveProcess, InterruptReleasesPort) {
  testing::TempDir dir;
  const std::string cli = EAPSH_CLI_PATH;
  ASSERT_EQ(std::system((cli + " pki init --key-bits 1024 --out " + dir.path().string() +
                         " > /dev/null").c_str()),
            0);
  auto probe = net::Listener::bind("127.0.0.1", 0);
  const auto port = std::to_string(probe.port());
  probe.close();

  const pid_t pid = fork();
  ASSERT_GE(pid, 0);
  if (pid == 0) {
    execl(cli.c_str(), cli.c_str(), "as", "serve", "--config", (dir / "as.conf").c_str(),
          "--listen", ("127.0.0.1:" + port).c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  bool up = false;
  for (int i = 0; i < 100 && !up; ++i) {
    std::this_thread::sleep_for(50ms);
    try {
      net::connect({"127.0.0.1", static_cast<std::uint16_t>(std::stoi(port))}, 200ms);
      up = true;
    } catch (const Error&) {
    }
  }
  ASSERT_TRUE(up);

  const int second = std::system((cli + " as serve --config " + (dir / "as.conf").string() +
                                  " --listen 127.0.0.1:" + port + " 2>/dev/null")
                                     .c_str());
  EXPECT_EQ(WEXITSTATUS(second), 1);

  kill(pid, SIGINT);
  int status = 0;
  waitpid(pid, &status, 0);
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 0);
  EXPECT_NO_THROW(net::Listener::bind("127.0.0.1", static_cast<std::uint16_t>(std::stoi(port))));
}

}  // namespace
}  // namespace eapsh
