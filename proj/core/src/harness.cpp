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

#include "eapsh/harness.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>

#include "eapsh/auth_server.hpp"
#include "eapsh/envelope.hpp"
#include "eapsh/http.hpp"
#include "eapsh/net.hpp"
#include "eapsh/portal.hpp"
#include "eapsh/pseudonym.hpp"

#ifndef EAPSH_DEFAULT_ASSETS_DIR
#define EAPSH_DEFAULT_ASSETS_DIR "assets/portal"
#endif

namespace eapsh {

namespace fs = std::filesystem;
using std::chrono::milliseconds;

// ---- queues ----

void MessageQueue::push(Bytes message) {
  {
    std::lock_guard lock(mu_);
    if (closed_) return;
    queue_.push_back(std::move(message));
  }
  cv_.notify_one();
}

std::optional<Bytes> MessageQueue::pop(milliseconds timeout) {
  std::unique_lock lock(mu_);
  if (!cv_.wait_for(lock, timeout, [&] { return !queue_.empty() || closed_; })) {
    return std::nullopt;
  }
  if (queue_.empty()) return std::nullopt;
  auto m = std::move(queue_.front());
  queue_.pop_front();
  return m;
}

void MessageQueue::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

std::size_t MessageQueue::size() const {
  std::lock_guard lock(mu_);
  return queue_.size();
}

// ---- names ----

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::Enroll: return "enroll";
    case Scenario::Reauth: return "reauth";
    case Scenario::BadPassword: return "bad_password";
    case Scenario::ExpiredCert: return "expired_cert";
    case Scenario::Impersonation: return "impersonation";
    case Scenario::RestartAs: return "restart_as";
  }
  return "?";
}

std::vector<Scenario> all_scenarios() {
  return {Scenario::Enroll,      Scenario::Reauth,        Scenario::BadPassword,
          Scenario::ExpiredCert, Scenario::Impersonation, Scenario::RestartAs};
}

std::optional<Scenario> parse_scenario(std::string_view name) {
  for (auto s : all_scenarios()) {
    if (name == to_string(s)) return s;
  }
  return std::nullopt;
}

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Success: return "Success";
    case Outcome::Failure: return "Failure";
    case Outcome::Timeout: return "Timeout";
  }
  return "?";
}

fs::path default_assets_dir() {
  if (const char* env = std::getenv("EAPSH_ASSETS_DIR")) return env;
  return EAPSH_DEFAULT_ASSETS_DIR;
}

// ---- scripted browser ----

std::string form_encode(const std::vector<std::pair<std::string, std::string>>& fields) {
  static const char* hex = "0123456789ABCDEF";
  auto enc = [](const std::string& s) {
    std::string out;
    for (unsigned char c : s) {
      if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
          c == '-' || c == '_' || c == '.' || c == '~') {
        out += static_cast<char>(c);
      } else if (c == ' ') {
        out += '+';
      } else {
        out += '%';
        out += hex[c >> 4];
        out += hex[c & 15];
      }
    }
    return out;
  };
  std::string out;
  for (const auto& [k, v] : fields) {
    if (!out.empty()) out += '&';
    out += enc(k) + "=" + enc(v);
  }
  return out;
}

BrowserRun run_browser(const std::string& base_url, const std::vector<BrowserStep>& steps,
                       milliseconds timeout) {
  BrowserRun run;
  const std::string prefix = "http://";
  if (base_url.rfind(prefix, 0) != 0) {
    run.error = "unsupported URL " + base_url;
    return run;
  }
  auto authority = base_url.substr(prefix.size());
  authority = authority.substr(0, authority.find('/'));
  HostPort hp;
  try {
    hp = parse_host_port(authority);
  } catch (const Error& e) {
    run.error = e.what();
    return run;
  }

  for (const auto& step : steps) {
    std::string req = step.method + " " + step.path + " HTTP/1.1\r\n";
    req += "Host: " + authority + "\r\n";
    req += "User-Agent: eapsh-scripted-browser\r\n";
    req += "Accept: text/html\r\n";
    req += "Connection: close\r\n";
    if (step.method == "POST") {
      req += "Content-Type: application/x-www-form-urlencoded\r\n";
      req += "Content-Length: " + std::to_string(step.form.size()) + "\r\n\r\n" + step.form;
    } else {
      req += "\r\n";
    }
    try {
      auto sock = net::connect(hp, timeout);
      sock.send_all(to_bytes(req));
      auto resp = net::read_http_response(sock, timeout);
      append(run.received, resp);
      run.statuses.push_back(http::status_code(resp).value_or(0));
    } catch (const Error& e) {
      run.error = e.what();
      break;
    }
  }
  return run;
}

// ---- fixture ----

namespace {

constexpr std::uint32_t kSessionBase = 0x5e55'0000;

std::vector<BrowserStep> login_steps(const std::string& user, const std::string& password) {
  return {{"GET", "/", ""},
          {"POST", "/login", form_encode({{"uname", user}, {"psw", std::string(password.size(), '*')},
                                          {"hpsw", password}})}};
}

struct Fixture {
  Fixture(const HarnessOptions& options, Seconds user_validity)
      : options(options), clock(std::chrono::system_clock::now()), rng(options.seed) {
    try {
      if (options.work_dir.empty()) {
        Bytes tag(6);
        system_random().fill(tag);
        dir = fs::temp_directory_path() / ("eapsh-" + to_hex(tag));
        owns_dir = !options.keep_work_dir;
      } else {
        dir = options.work_dir;
      }
      fs::create_directories(dir);

      pki = make_pki_fixture(clock.now(), options.key_bits);
      save_chain(dir / "ca.pem", std::vector<Certificate>{pki->root});

      UserStore users;
      users.add(kFixtureUser, kFixturePassword, rng);
      users.add(kFixtureOtherUser, kFixtureOtherPassword, rng);
      const auto assets = options.assets_dir.empty() ? default_assets_dir() : options.assets_dir;
      portal = std::make_unique<CaptivePortal>(std::move(users), assets);
      portal->start({"127.0.0.1", 0});

      settings = AsSettings{pki->server_chain(),
                            pki->server_key,
                            {pki->intermediate},
                            pki->issuer(user_validity),
                            portal->endpoint(),
                            kDefaultMaxEapPacket,
                            options.timeout};
    } catch (const Error& e) {
      throw Error(Errc::FixtureError, e.what());
    }
  }

  ~Fixture() {
    if (portal) portal->stop();
    if (owns_dir) {
      std::error_code ec;
      fs::remove_all(dir, ec);
    }
  }

  std::unique_ptr<AuthServer> start_as() {
    AuthServerOptions o;
    o.clock = &clock;
    o.rng = &rng;
    return std::make_unique<AuthServer>(*settings, std::move(o));
  }

  SupplicantConfig supplicant_config() const {
    SupplicantConfig c;
    c.ssid = "eapsh-sim";
    c.ca_path = dir / "ca.pem";
    c.client_cert = dir / "user.pem";
    c.private_key = dir / "user.key";
    c.private_key_password = "sim-key-password";
    c.browser_command = "scripted-browser %s";
    c.inactivity_timeout = options.timeout;
    return c;
  }

  HarnessOptions options;
  ManualClock clock;
  SeededRandom rng;
  fs::path dir;
  bool owns_dir = false;
  std::optional<PkiFixture> pki;
  std::unique_ptr<CaptivePortal> portal;
  std::optional<AsSettings> settings;
  std::uint32_t next_session = kSessionBase;
};

struct Attempt {
  SupplicantRunResult supplicant;
  Transcript transcript;
  std::optional<Msk> authenticator_msk;
  std::optional<AsDecision> decision;
  std::string fallback_reason;
  BrowserRun browser;
  std::vector<IoRecord> io;
  std::string url;
  SupplicantTimings timings;
  std::size_t portal_requests = 0;
  std::size_t certificates_issued = 0;
  std::optional<std::chrono::microseconds> issuance;
};

// Supplicant, authenticator and AS each run as their own actor; the two
// legs are the only way bytes move between them.
Attempt run_attempt(Fixture& fx, AuthServer& as, const std::vector<BrowserStep>& steps,
                    std::function<std::string(const std::string&)> csr_override = {}) {
  Attempt a;
  const auto timeout = std::chrono::duration_cast<milliseconds>(fx.options.timeout);
  const auto session_id = fx.next_session++;
  const auto stats_before = as.stats();
  fx.portal->reset_request_count();

  VirtualLink to_authenticator;  // supplicant <-> authenticator
  VirtualLink to_as;             // authenticator <-> AS
  AsDispatcher dispatcher(as);
  std::atomic<bool> stop{false};
  std::mutex msk_mu;

  std::thread as_actor([&] {
    while (!stop) {
      auto m = to_as.forward.pop(milliseconds(20));
      if (!m) continue;
      try {
        for (const auto& reply : dispatcher.handle(decode_envelope(*m))) {
          to_as.backward.push(encode_envelope(reply));
        }
      } catch (const Error&) {
      }
    }
  });

  std::thread authenticator([&] {
    to_as.forward.push(encode_envelope({EnvelopeType::Start, session_id, {}}));
    while (!stop) {
      if (auto m = to_authenticator.forward.pop(milliseconds(1))) {
        a.transcript.record(*m, "supplicant", "to_as");
        to_as.forward.push(encode_envelope({EnvelopeType::Eap, session_id, *m}));
      }
      auto m = to_as.backward.pop(milliseconds(1));
      if (!m) continue;
      Envelope env;
      try {
        env = decode_envelope(*m);
      } catch (const Error&) {
        continue;
      }
      Bytes eap = env.payload;
      if (env.type == EnvelopeType::Accept) {
        auto [msk, success] = split_accept(env);
        {
          std::lock_guard lock(msk_mu);
          a.authenticator_msk = msk;
        }
        a.transcript.note({0, "as", "to_authenticator", "msk", "", kMskSize});
        eap = std::move(success);
      }
      a.transcript.record(eap, "as", "to_supplicant");
      to_authenticator.backward.push(std::move(eap));
    }
  });

  std::thread browser;
  IoRecorder recorder;
  try {
    SupplicantOptions so;
    so.clock = &fx.clock;
    so.rng = &fx.rng;
    so.csr_name_override = std::move(csr_override);
    SupplicantSession session(fx.supplicant_config(), std::move(so));

    SupplicantHostOptions ho;
    ho.recorder = &recorder;
    ho.launcher = [&](const LaunchBrowser& launch) {
      a.url = launch.url;
      if (browser.joinable()) return;
      browser = std::thread([&, url = launch.url] { a.browser = run_browser(url, steps, timeout); });
    };
    LinkTransport transport(to_authenticator);
    SupplicantHost host(session, transport, std::move(ho));
    a.supplicant = host.run();
    a.timings = session.timings();
  } catch (const Error& e) {
    a.supplicant.error = e.code();
    a.supplicant.detail = e.what();
  }

  // Let the authenticator finish relaying a final Accept/Reject.
  for (int i = 0; i < 50 && (to_as.forward.size() || to_as.backward.size()); ++i) {
    std::this_thread::sleep_for(milliseconds(2));
  }
  stop = true;
  to_authenticator.close();
  to_as.close();
  as_actor.join();
  authenticator.join();
  if (browser.joinable()) browser.join();

  a.decision = dispatcher.decision(session_id);
  a.fallback_reason = dispatcher.fallback_reason(session_id);
  a.io = recorder.records();
  a.portal_requests = fx.portal->request_count();
  const auto stats_after = as.stats();
  a.certificates_issued = stats_after.certificates_issued - stats_before.certificates_issued;
  if (stats_after.issuance_times.size() > stats_before.issuance_times.size()) {
    a.issuance = stats_after.issuance_times.back();
  }
  return a;
}

ScenarioCounters count(const Transcript& transcript) {
  ScenarioCounters c;
  bool to_as_multi = false;
  bool to_sup_multi = false;
  for (const auto& e : transcript.events()) {
    if (e.kind != "request" && e.kind != "response" && e.kind != "success" &&
        e.kind != "failure") {
      continue;
    }
    ++c.frames;
    const bool more = e.flags.find('M') != std::string::npos;
    auto& multi = e.direction == "to_as" ? to_as_multi : to_sup_multi;
    if (more || multi) ++c.fragments;
    multi = more;
    if (e.flags.find('S') != std::string::npos) ++c.s_frames;
    if (e.flags.find('H') != std::string::npos) ++c.h_frames;
    if (e.flags.find('C') != std::string::npos) ++c.c_frames;
  }
  return c;
}

void require_setup(const Attempt& a, const char* what) {
  if (!a.supplicant.success) {
    throw Error(Errc::FixtureError, std::string(what) + " did not succeed: " + a.supplicant.detail);
  }
}

}  // namespace

ScenarioResult run_scenario(Scenario scenario, const HarnessOptions& options) {
  const Seconds validity = scenario == Scenario::ExpiredCert ? Seconds(1) : kDefaultUserCertValidity;
  Fixture fx(options, validity);
  auto as = fx.start_as();

  ScenarioResult r;
  r.scenario = scenario;
  std::chrono::microseconds elapsed{0};
  auto timed = [&](const std::vector<BrowserStep>& steps,
                   std::function<std::string(const std::string&)> override_name = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    auto a = run_attempt(fx, *as, steps, std::move(override_name));
    elapsed = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::steady_clock::now() - t0);
    return a;
  };

  const auto enroll_steps = login_steps(kFixtureUser, kFixturePassword);
  std::optional<Attempt> measured;
  switch (scenario) {
    case Scenario::Enroll:
      measured = timed(enroll_steps);
      break;
    case Scenario::Reauth: {
      auto setup = run_attempt(fx, *as, enroll_steps);
      require_setup(setup, "enrollment");
      ++r.setup_attempts;
      measured = timed({});
      break;
    }
    case Scenario::BadPassword: {
      auto steps = login_steps(kFixtureUser, "not-the-password");
      steps.push_back({"GET", "/", ""});
      auto good = login_steps(kFixtureUser, kFixturePassword);
      steps.push_back(good.back());
      measured = timed(steps);
      break;
    }
    case Scenario::ExpiredCert: {
      auto setup = run_attempt(fx, *as, enroll_steps);
      require_setup(setup, "enrollment");
      ++r.setup_attempts;
      fx.clock.advance(std::chrono::seconds(5));
      measured = timed(enroll_steps);
      break;
    }
    case Scenario::Impersonation: {
      // A well-formed pseudonym for another user that the AS never handed out.
      auto forged = generate_pseudonym(kFixtureOtherUser, as->pseudonym_key(), fx.rng).text;
      measured = timed(enroll_steps, [forged](const std::string&) { return forged; });
      break;
    }
    case Scenario::RestartAs: {
      auto setup = run_attempt(fx, *as, enroll_steps);
      require_setup(setup, "enrollment");
      ++r.setup_attempts;
      as = fx.start_as();
      measured = timed(enroll_steps);
      break;
    }
  }

  auto& a = *measured;
  const bool supplicant_ok = a.supplicant.success;
  const bool authenticator_ok = a.authenticator_msk.has_value();
  if (supplicant_ok && authenticator_ok) {
    r.outcome = Outcome::Success;
  } else if (a.supplicant.error == Errc::Timeout) {
    r.outcome = Outcome::Timeout;
  } else {
    r.outcome = Outcome::Failure;
  }
  r.msk_match = r.outcome == Outcome::Success && a.supplicant.msk && a.authenticator_msk &&
                *a.supplicant.msk == *a.authenticator_msk;

  if (a.decision && a.decision->kind == AsDecision::Kind::Failure && a.decision->reason) {
    r.error = a.decision->reason;
    r.detail = a.decision->detail;
  } else if (!supplicant_ok) {
    r.error = a.supplicant.error;
    r.detail = a.supplicant.detail;
  }
  r.as_fallback_reason = a.fallback_reason;
  r.transcript = a.transcript;
  r.counters = count(a.transcript);
  r.counters.portal_requests = a.portal_requests;
  r.counters.browser_requests = a.browser.statuses.size();
  r.counters.certificates_issued = a.certificates_issued;
  r.timings.csr_generation = a.timings.csr_generation;
  r.timings.issuance = a.issuance;
  r.delivered_to_browser = std::move(a.supplicant.browser_bytes);
  r.browser_received = std::move(a.browser.received);
  r.io = std::move(a.io);
  r.local_endpoint_url = a.url;
  r.timings.total = elapsed;
  return r;
}

bool expected_outcome(const ScenarioResult& r) {
  switch (r.scenario) {
    case Scenario::Impersonation:
      return r.outcome == Outcome::Failure && r.error == Errc::StalePseudonym;
    case Scenario::Enroll:
    case Scenario::Reauth:
    case Scenario::BadPassword:
    case Scenario::ExpiredCert:
    case Scenario::RestartAs:
      return r.outcome == Outcome::Success && r.msk_match;
  }
  return false;
}

std::vector<std::string> isolation_violations(const ScenarioResult& r) {
  std::vector<std::string> out;
  std::string endpoint_host;
  if (!r.local_endpoint_url.empty()) {
    auto authority = r.local_endpoint_url.substr(std::string("http://").size());
    endpoint_host = authority.substr(0, authority.find(':'));
  }
  for (const auto& rec : r.io) {
    if (!rec.before_success) continue;
    const std::string what = std::string(to_string(rec.channel)) + " " + to_string(rec.op) +
                             " local=" + rec.local + " peer=" + rec.peer;
    if (rec.channel == IoRecord::Channel::Eap) {
      if (rec.op == IoRecord::Op::Connect || rec.op == IoRecord::Op::Accept) {
        out.push_back("EAP link opened a socket: " + what);
      }
      continue;
    }
    if (rec.channel == IoRecord::Channel::Other) {
      out.push_back(what);
      continue;
    }
    if (rec.op == IoRecord::Op::Connect) {
      out.push_back("outbound connection: " + what);
      continue;
    }
    const auto local_host = rec.local.substr(0, rec.local.find(':'));
    if (!net::is_loopback(local_host) || local_host != endpoint_host) {
      out.push_back("browser I/O off the local endpoint: " + what);
      continue;
    }
    if (!rec.peer.empty() && rec.op != IoRecord::Op::Spawn && !net::is_loopback(rec.peer)) {
      out.push_back("non-loopback peer: " + what);
    }
  }
  return out;
}

}  // namespace eapsh
