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

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "eapsh/auth_server.hpp"
#include "eapsh/codec.hpp"
#include "eapsh/error.hpp"
#include "eapsh/harness.hpp"
#include "eapsh/live.hpp"
#include "eapsh/pki.hpp"
#include "eapsh/portal.hpp"
#include "eapsh/pseudonym.hpp"
#include "eapsh/supplicant.hpp"
#include "eapsh/vectors.hpp"

#ifndef EAPSH_VECTORS_FILE
#define EAPSH_VECTORS_FILE "vectors/eapsh_codec.hex"
#endif

namespace {

namespace fs = std::filesystem;
using namespace eapsh;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

void install_signal_handlers() {
  struct sigaction sa {};
  sa.sa_handler = on_signal;
  sigemptyset(&sa.sa_mask);
  sigaction(SIGINT, &sa, nullptr);
  sigaction(SIGTERM, &sa, nullptr);
  std::signal(SIGPIPE, SIG_IGN);
}

void log_line(const std::string& line) {
  std::cerr << line << std::endl;
}

std::string millis(std::optional<std::chrono::microseconds> us) {
  if (!us) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", static_cast<double>(us->count()) / 1000.0);
  return buf;
}

// ---- sim ----

struct SimArgs {
  std::string scenario;
  std::string transcript;
  int key_bits = kDefaultUserKeyBits;
  std::uint64_t seed = 1;
  int timeout = 20;
  std::string assets;
};

int cmd_sim(const SimArgs& args) {
  auto scenario = parse_scenario(args.scenario);
  if (!scenario) {
    std::cerr << "unknown scenario '" << args.scenario << "'; expected one of:";
    for (auto s : all_scenarios()) std::cerr << ' ' << to_string(s);
    std::cerr << '\n';
    return kExitUsage;
  }
  HarnessOptions options;
  options.key_bits = args.key_bits;
  options.seed = args.seed;
  options.timeout = std::chrono::seconds(args.timeout);
  if (!args.assets.empty()) options.assets_dir = args.assets;

  auto r = run_scenario(*scenario, options);
  if (!args.transcript.empty()) r.transcript.write(args.transcript);

  const auto& c = r.counters;
  std::cout << "scenario: " << to_string(r.scenario) << '\n'
            << "outcome: " << to_string(r.outcome) << '\n'
            << "msk_match: " << (r.msk_match ? "true" : "false") << '\n'
            << "frames: " << c.frames << " (fragments " << c.fragments << ", S " << c.s_frames
            << ", H " << c.h_frames << ", C " << c.c_frames << ")\n"
            << "portal_requests: " << c.portal_requests << '\n'
            << "certificates_issued: " << c.certificates_issued << '\n'
            << "csr_generation_ms: " << millis(r.timings.csr_generation) << '\n'
            << "issuance_ms: " << millis(r.timings.issuance) << '\n'
            << "attempt_ms: " << millis(r.timings.total) << '\n';
  if (!r.as_fallback_reason.empty()) std::cout << "phase1_fallback: " << r.as_fallback_reason << '\n';
  if (r.error) std::cout << "error: " << r.detail << '\n';
  return r.outcome == Outcome::Success ? kExitOk : kExitFailure;
}

// ---- portal ----

int cmd_portal_serve(const std::string& bind, const std::string& assets, const std::string& users) {
  auto store = UserStore::load(users);
  CaptivePortal portal(std::move(store), assets.empty() ? default_assets_dir() : fs::path(assets));
  portal.start(parse_host_port(bind));
  log_line("captive portal listening on http://" + portal.endpoint().to_string() + "/");
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  portal.stop();
  log_line("captive portal stopped after " + std::to_string(portal.request_count()) + " requests");
  return kExitOk;
}

int cmd_portal_add_user(const std::string& users, const std::string& username,
                        std::string password, bool password_stdin) {
  if (password_stdin) std::getline(std::cin, password);
  if (password.empty()) {
    std::cerr << "a password is required (--password or --password-stdin)\n";
    return kExitUsage;
  }
  UserStore store;
  if (fs::exists(users)) store = UserStore::load(users);
  store.add(username, password);
  store.save(users);
  std::cout << "stored user " << username << " in " << users << '\n';
  return kExitOk;
}

// ---- as / supplicant ----

int cmd_as_serve(const std::string& config, const std::string& listen,
                 const std::string& transcript) {
  auto settings = AsSettings::load(AsConfig::load(config));
  AuthServer server(std::move(settings));
  LiveAuthServer live(server, parse_host_port(listen), log_line);
  live.serve(g_stop);
  if (!transcript.empty()) live.transcript().write(transcript);
  return kExitOk;
}

int cmd_supplicant_run(const std::string& config, const std::string& as) {
  auto cfg = SupplicantConfig::load(config);
  SupplicantSession session(cfg);
  log_line(session.credentials() ? "using cached certificate " + cfg.client_cert.string()
                                 : "no cached certificate; enrollment will be needed");
  auto transport = TcpEapTransport::connect(parse_host_port(as));
  SupplicantHostOptions ho;
  ho.launcher = [](const LaunchBrowser& launch) {
    log_line("open " + launch.url + " to log in");
    if (!launch.command.empty()) {
      std::thread([cmd = launch.command] {
    if (std::system(cmd.c_str()) != 0) return;
  }).detach();
    }
  };
  SupplicantHost host(session, transport, std::move(ho));
  auto r = host.run();
  if (r.success) {
    std::cout << "EAP Success; MSK " << msk_fingerprint(*r.msk) << "...\n";
    return kExitOk;
  }
  std::cout << "authentication failed: " << (r.detail.empty() ? "EAP Failure" : r.detail) << '\n';
  return kExitFailure;
}

// ---- pki ----

int cmd_pki_init(const std::string& out_dir, int key_bits, const std::string& password,
                 const std::string& portal) {
  const fs::path out(out_dir);
  fs::create_directories(out);
  auto fx = make_pki_fixture(std::chrono::system_clock::now(), key_bits);
  save_chain(out / "root.pem", std::vector<Certificate>{fx.root});
  fx.root_key.save(out / "root.key", password);
  save_chain(out / "uca.pem", std::vector<Certificate>{fx.intermediate, fx.root});
  fx.intermediate_key.save(out / "uca.key", password);
  save_chain(out / "server.pem", fx.server_chain());
  fx.server_key.save(out / "server.key", password);
  save_chain(out / "ca.pem", std::vector<Certificate>{fx.root});

  AsConfig as;
  as.certificate_file = fs::absolute(out / "server.pem");
  as.private_key_file = fs::absolute(out / "server.key");
  as.private_key_password = password;
  as.ca_file = fs::absolute(out / "uca.pem");
  as.user_certificate_issuer_cert = fs::absolute(out / "uca.pem");
  as.user_certificate_issuer_key = fs::absolute(out / "uca.key");
  as.user_certificate_issuer_key_password = password;
  as.captive_portal_endpoint = parse_host_port(portal);
  std::ofstream(out / "as.conf") << as.to_kv().serialize();

  SupplicantConfig sc;
  sc.ssid = "eapsh";
  sc.ca_path = fs::absolute(out / "ca.pem");
  sc.client_cert = fs::absolute(out / "user.pem");
  sc.private_key = fs::absolute(out / "user.key");
  sc.private_key_password = password.empty() ? "change-me" : password;
  sc.browser_command = "xdg-open %s";
  std::ofstream(out / "supplicant.conf") << "network={\n" << sc.to_kv().serialize() << "}\n";

  std::cout << "root CA:         " << (out / "root.pem").string() << '\n'
            << "users' CA:       " << (out / "uca.pem").string() << '\n'
            << "server chain:    " << (out / "server.pem").string() << '\n'
            << "AS config:       " << (out / "as.conf").string() << '\n'
            << "supplicant conf: " << (out / "supplicant.conf").string() << '\n';
  return kExitOk;
}

// ---- pseudonym ----

int cmd_pseudonym_demo(const std::string& identity, const std::string& key_hex,
                       const std::string& iv_hex) {
  PseudonymKey key;
  if (key_hex.empty()) {
    key = PseudonymKey::generate();
  } else {
    auto k = from_hex(key_hex);
    if (k.size() != key.k.size()) {
      std::cerr << "--key must be 32 hex digits\n";
      return kExitUsage;
    }
    std::copy(k.begin(), k.end(), key.k.begin());
  }
  Pseudonym p;
  if (iv_hex.empty()) {
    p = generate_pseudonym(identity, key);
  } else {
    auto v = from_hex(iv_hex);
    PseudonymIv iv{};
    if (v.size() != iv.size()) {
      std::cerr << "--iv must be 32 hex digits\n";
      return kExitUsage;
    }
    std::copy(v.begin(), v.end(), iv.begin());
    p = generate_pseudonym(identity, key, iv);
  }
  std::cout << "key:       " << to_hex(key.k) << '\n'
            << "identity:  " << identity << '\n'
            << "pseudonym: " << p.text << " (" << p.text.size() << " chars)\n"
            << "resolves:  " << resolve_pseudonym(p, key) << '\n';

  PseudonymCache cache;
  const auto now = std::chrono::system_clock::now();
  cache.insert(p, now);
  const bool first = cache.take_fresh(p.text, now + std::chrono::seconds(59));
  const bool second = cache.take_fresh(p.text, now + std::chrono::seconds(59));
  std::cout << "cache:     first use at 59 s " << (first ? "accepted" : "rejected")
            << ", second use " << (second ? "accepted" : "rejected") << '\n';
  return kExitOk;
}

// ---- vectors ----

int cmd_vectors_check(const std::string& file) {
  auto report = check_vector_file(file);
  for (const auto& line : report.failures) std::cout << "FAIL " << line << '\n';
  std::cout << report.passed << " of " << report.total << " codec vectors match\n";
  return report.failures.empty() && report.total > 0 ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  install_signal_handlers();
  CLI::App app{"EAP-SH supplicant, authentication server, captive portal and simulator"};
  app.require_subcommand(1);

  SimArgs sim;
  auto* sim_cmd = app.add_subcommand("sim", "Run a scenario over the in-memory network");
  sim_cmd->add_option("scenario", sim.scenario,
                      "enroll, reauth, bad_password, expired_cert, impersonation, restart_as")
      ->required();
  sim_cmd->add_option("--transcript", sim.transcript, "Write the JSON-lines transcript here");
  sim_cmd->add_option("--key-bits", sim.key_bits, "RSA size for the fixture PKI")
      ->check(CLI::IsMember({1024, 2048, 3072, 4096}));
  sim_cmd->add_option("--seed", sim.seed, "Seed for IVs, identifiers and ports");
  sim_cmd->add_option("--timeout", sim.timeout, "Inactivity timeout in seconds");
  sim_cmd->add_option("--assets", sim.assets, "Portal asset directory");

  auto* portal_cmd = app.add_subcommand("portal", "Captive portal");
  portal_cmd->require_subcommand(1);
  std::string portal_bind = "127.0.0.1:8080", portal_assets, portal_users = "users.db";
  auto* portal_serve = portal_cmd->add_subcommand("serve", "Serve the login page");
  portal_serve->add_option("--bind", portal_bind, "host:port");
  portal_serve->add_option("--assets", portal_assets, "Directory holding index.html");
  portal_serve->add_option("--users", portal_users, "User store")->required();
  std::string add_name, add_password;
  bool add_stdin = false;
  auto* portal_add = portal_cmd->add_subcommand("add-user", "Add or replace a user");
  portal_add->add_option("--users", portal_users, "User store")->required();
  portal_add->add_option("--username", add_name)->required();
  portal_add->add_option("--password", add_password);
  portal_add->add_flag("--password-stdin", add_stdin, "Read the password from stdin");

  auto* as_cmd = app.add_subcommand("as", "Authentication server");
  as_cmd->require_subcommand(1);
  std::string as_config, as_listen = "127.0.0.1:18120", as_transcript;
  auto* as_serve = as_cmd->add_subcommand("serve", "Serve supplicants over loopback TCP");
  as_serve->add_option("--config", as_config, "AS configuration file")->required();
  as_serve->add_option("--listen", as_listen, "host:port");
  as_serve->add_option("--transcript", as_transcript, "Write a JSON-lines transcript on exit");

  auto* supp_cmd = app.add_subcommand("supplicant", "Supplicant");
  supp_cmd->require_subcommand(1);
  std::string supp_config, supp_as = "127.0.0.1:18120";
  auto* supp_run = supp_cmd->add_subcommand("run", "Authenticate once against an AS");
  supp_run->add_option("--config", supp_config, "Supplicant configuration file")->required();
  supp_run->add_option("--as", supp_as, "AS host:port");

  auto* pki_cmd = app.add_subcommand("pki", "Certificates");
  pki_cmd->require_subcommand(1);
  std::string pki_out = "pki", pki_password, pki_portal = "127.0.0.1:8080";
  int pki_bits = kDefaultUserKeyBits;
  auto* pki_init = pki_cmd->add_subcommand("init", "Create root, users' CA and server certificates");
  pki_init->add_option("--out", pki_out, "Output directory");
  pki_init->add_option("--key-bits", pki_bits)->check(CLI::IsMember({1024, 2048, 3072, 4096}));
  pki_init->add_option("--password", pki_password, "Encrypt private keys with this password");
  pki_init->add_option("--portal", pki_portal, "Captive portal host:port for as.conf");

  auto* ps_cmd = app.add_subcommand("pseudonym", "Pseudonyms");
  ps_cmd->require_subcommand(1);
  std::string ps_identity = "alice", ps_key, ps_iv;
  auto* ps_demo = ps_cmd->add_subcommand("demo", "Encode and resolve one identity");
  ps_demo->add_option("--identity", ps_identity);
  ps_demo->add_option("--key", ps_key, "16-byte key in hex (default: random)");
  ps_demo->add_option("--iv", ps_iv, "16-byte IV in hex (default: random)");

  auto* vec_cmd = app.add_subcommand("vectors", "Codec golden vectors");
  vec_cmd->require_subcommand(1);
  std::string vec_file = EAPSH_VECTORS_FILE;
  auto* vec_check = vec_cmd->add_subcommand("check", "Check the codec against a vector file");
  vec_check->add_option("--file", vec_file);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*sim_cmd) return cmd_sim(sim);
    if (*portal_serve) return cmd_portal_serve(portal_bind, portal_assets, portal_users);
    if (*portal_add) return cmd_portal_add_user(portal_users, add_name, add_password, add_stdin);
    if (*as_serve) return cmd_as_serve(as_config, as_listen, as_transcript);
    if (*supp_run) return cmd_supplicant_run(supp_config, supp_as);
    if (*pki_init) return cmd_pki_init(pki_out, pki_bits, pki_password, pki_portal);
    if (*ps_demo) return cmd_pseudonym_demo(ps_identity, ps_key, ps_iv);
    if (*vec_check) return cmd_vectors_check(vec_file);
  } catch (const Error& e) {
    std::cerr << "eapsh: " << e.what() << '\n';
    return e.code() == Errc::UsageError ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "eapsh: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
