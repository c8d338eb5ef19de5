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

#include <fstream>

#include "eapsh/auth_server.hpp"
#include "eapsh/config.hpp"
#include "eapsh/error.hpp"
#include "eapsh/supplicant.hpp"
#include "test_support.hpp"

namespace eapsh {
namespace {

TEST(KeyValue, ParsesNetworkBlock) {
  auto kv = KeyValueConfig::parse(
      "# comment\nnetwork={\n  ssid=\"campus\"\n  eap=SH\n  ca_path=\"/etc/ca\"\n}\n");
  EXPECT_EQ(kv.get("ssid"), "campus");
  EXPECT_EQ(kv.require("ca_path"), "/etc/ca");
  EXPECT_FALSE(kv.has("network"));
  EXPECT_THROW(kv.require("client_cert"), Error);
  EXPECT_EQ(kv.get_int("missing", 7), 7);
}

TEST(KeyValue, SerializeRoundTrip) {
  KeyValueConfig kv;
  kv.set("a", "1");
  kv.set("b", "two words");
  EXPECT_EQ(KeyValueConfig::parse(kv.serialize()).values(), kv.values());
}

TEST(KeyValue, HostPort) {
  auto hp = parse_host_port("127.0.0.1:8080");
  EXPECT_EQ(hp.host, "127.0.0.1");
  EXPECT_EQ(hp.port, 8080);
  EXPECT_EQ(hp.to_string(), "127.0.0.1:8080");
  EXPECT_THROW(parse_host_port("localhost"), Error);
  EXPECT_THROW(parse_host_port("x:70000"), Error);
  EXPECT_THROW(parse_host_port("x:abc"), Error);
}

TEST(SupplicantConfig, Validation) {
  auto kv = KeyValueConfig::parse("ca_path=/ca\nclient_cert=/c\nprivate_key=/k\n");
  auto c = SupplicantConfig::from_kv(kv);
  EXPECT_EQ(c.eap, "SH");
  EXPECT_EQ(c.csr_key_bits, 2048);
  EXPECT_EQ(c.max_eap_packet, 1020u);

  EXPECT_THROW(SupplicantConfig::from_kv(KeyValueConfig::parse("eap=TLS\nca_path=/ca\n")),
               Error);
  EXPECT_THROW(SupplicantConfig::from_kv(KeyValueConfig::parse("ssid=x\n")), Error);
  EXPECT_THROW(SupplicantConfig::from_kv(KeyValueConfig::parse("ca_path=/ca\nclient_cert=/c\n")),
               Error);
  EXPECT_THROW(SupplicantConfig::from_kv(KeyValueConfig::parse("ca_path=/ca\ncsr_key_bits=512\n")),
               Error);
  EXPECT_NO_THROW(
      SupplicantConfig::from_kv(KeyValueConfig::parse("ca_path=/ca\ncsr_key_bits=1024\n")));
}

TEST(SupplicantConfig, RoundTrip) {
  SupplicantConfig c;
  c.ssid = "campus";
  c.ca_path = "/etc/ca";
  c.client_cert = "/c.pem";
  c.private_key = "/k.pem";
  c.browser_command = "firefox %s";
  auto back = SupplicantConfig::from_kv(KeyValueConfig::parse(c.to_kv().serialize()));
  EXPECT_EQ(back.ssid, c.ssid);
  EXPECT_EQ(back.browser_command, c.browser_command);
  EXPECT_EQ(back.client_cert, c.client_cert);
}

TEST(SupplicantConfig, BrowserCommand) {
  EXPECT_EQ(browser_command_for("firefox %s", "http://127.1.2.3:4000/"),
            "firefox http://127.1.2.3:4000/");
  EXPECT_EQ(browser_command_for("a %s b %s", "u"), "a u b u");
  EXPECT_EQ(browser_command_for("open", "u"), "open");
}

TEST(SupplicantConfig, Credentials) {
  testing::TempDir dir;
  SupplicantConfig c;
  c.ca_path = dir / "ca.pem";
  c.client_cert = dir / "user.pem";
  c.private_key = dir / "user.key";
  c.private_key_password = "pw";
  EXPECT_FALSE(load_credentials(c));

  const auto& fx = testing::shared_pki();
  auto k = KeyPair::generate(1024);
  auto cert = issue_certificate(fx.issuer(), build_csr(k, "p-1"), std::chrono::system_clock::now());
  save_chain(c.client_cert, std::vector<Certificate>{cert});
  k.save(c.private_key, "pw");
  auto creds = load_credentials(c);
  ASSERT_TRUE(creds);
  EXPECT_EQ(creds->chain.front(), cert);

  c.private_key_password = "wrong";
  EXPECT_THROW(load_credentials(c), Error);

  KeyPair::generate(1024).save(c.private_key, "pw");
  c.private_key_password = "pw";
  EXPECT_THROW(load_credentials(c), Error);
}

TEST(AsConfig, LoadAndValidate) {
  testing::TempDir dir;
  const auto& fx = testing::shared_pki();
  save_chain(dir / "server.pem", fx.server_chain());
  fx.server_key.save(dir / "server.key", "pw");
  save_chain(dir / "uca.pem", std::vector<Certificate>{fx.intermediate, fx.root});
  fx.intermediate_key.save(dir / "uca.key", "pw");
  {
    std::ofstream out(dir / "as.conf");
    out << "certificate_file=" << (dir / "server.pem").string() << "\n"
        << "private_key_file=" << (dir / "server.key").string() << "\n"
        << "private_key_password=pw\n"
        << "ca_file=" << (dir / "uca.pem").string() << "\n"
        << "user_certificate_issuer_cert=" << (dir / "uca.pem").string() << "\n"
        << "user_certificate_issuer_key=" << (dir / "uca.key").string() << "\n"
        << "user_certificate_issuer_key_password=pw\n"
        << "user_certificate_validity=3600\n"
        << "captive_portal_endpoint=127.0.0.1:8080\n";
  }
  auto cfg = AsConfig::load(dir / "as.conf");
  EXPECT_EQ(cfg.user_certificate_validity, Seconds(3600));
  auto settings = AsSettings::load(cfg);
  EXPECT_EQ(settings.server_chain.size(), 2u);
  EXPECT_EQ(settings.issuer.ca_chain.front(), fx.intermediate);
  EXPECT_EQ(settings.portal.port, 8080);

  auto back = AsConfig::from_kv(cfg.to_kv());
  EXPECT_EQ(back.certificate_file, cfg.certificate_file);

  cfg.private_key_password = "nope";
  EXPECT_THROW(AsSettings::load(cfg), Error);
  cfg.private_key_password = "pw";
  cfg.private_key_file = dir / "uca.key";
  EXPECT_THROW(AsSettings::load(cfg), Error);
  cfg.private_key_file = dir / "missing.key";
  EXPECT_THROW(AsSettings::load(cfg), Error);
}

}  // namespace
}  // namespace eapsh
