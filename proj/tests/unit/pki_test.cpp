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
#include "eapsh/pki.hpp"
#include "test_support.hpp"

namespace eapsh {
namespace {

using std::chrono::hours;
using std::chrono::seconds;
using testing::shared_pki;

Errc validate_error(const Certificate& c, const std::vector<Certificate>& anchors,
                    SystemTime at) {
  try {
    validate_chain(c, anchors, at);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "validated";
  return Errc::UsageError;
}

TEST(Pki, KeySizes) {
  EXPECT_TRUE(is_allowed_key_size(1024));
  EXPECT_TRUE(is_allowed_key_size(4096));
  EXPECT_FALSE(is_allowed_key_size(512));
  try {
    KeyPair::generate(512);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::BadKeySize);
  }
}

TEST(Pki, KeyPairsAreFreshAndConsistent) {
  auto a = KeyPair::generate(1024);
  auto b = KeyPair::generate(1024);
  EXPECT_EQ(a.bits(), 1024);
  EXPECT_NE(a.public_der(), b.public_der());
  auto msg = to_bytes("hello");
  auto sig = a.sign(msg);
  EXPECT_TRUE(a.verify(msg, sig));
  EXPECT_FALSE(b.verify(msg, sig));
}

TEST(Pki, EncryptedKeyRoundTrip) {
  testing::TempDir dir;
  auto k = KeyPair::generate(1024);
  k.save(dir / "k.pem", "pw");
  EXPECT_EQ(KeyPair::load(dir / "k.pem", "pw").public_der(), k.public_der());
  EXPECT_THROW(KeyPair::load(dir / "k.pem", "wrong"), Error);
  EXPECT_NE(k.to_pem("pw").find("ENCRYPTED"), std::string::npos);
}

TEST(Pki, CsrRoundTrip) {
  auto k = KeyPair::generate(1024);
  auto csr = build_csr(k, "p-abc123");
  EXPECT_EQ(csr.subject_common_name(), "p-abc123");
  auto back = parse_csr(csr.der());
  EXPECT_EQ(back.subject_common_name(), "p-abc123");
  EXPECT_EQ(back.public_der(), k.public_der());
}

TEST(Pki, CsrCarriesLongPseudonym) {
  auto k = KeyPair::generate(1024);
  const std::string cn(72, 'Q');
  EXPECT_EQ(parse_csr(build_csr(k, cn).der()).subject_common_name(), cn);
}

TEST(Pki, CsrBadNames) {
  auto k = KeyPair::generate(1024);
  EXPECT_THROW(build_csr(k, ""), Error);
  EXPECT_THROW(build_csr(k, "caf\xc3\xa9"), Error);
}

TEST(Pki, CsrCorruption) {
  auto k = KeyPair::generate(1024);
  auto der = build_csr(k, "p-abc123").der();
  auto bad_sig = der;
  bad_sig[bad_sig.size() - 5] ^= 0x01;
  try {
    parse_csr(bad_sig);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::BadSelfSignature);
  }
  Bytes truncated(der.begin(), der.begin() + 40);
  try {
    parse_csr(truncated);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::Malformed);
  }
}

TEST(Pki, IssueAndValidate) {
  const auto& fx = shared_pki();
  const auto now = std::chrono::system_clock::now();
  auto k = KeyPair::generate(1024);
  auto cert = issue_certificate(fx.issuer(), build_csr(k, "p-xyz"), now);
  EXPECT_EQ(cert.subject_common_name(), "p-xyz");
  EXPECT_EQ(cert.public_der(), k.public_der());
  EXPECT_EQ(cert.issuer_common_name(), fx.intermediate.subject_common_name());
  auto life = cert.not_after() - cert.not_before();
  EXPECT_GE(life, hours(24) - seconds(2));
  EXPECT_LE(life, hours(24) + seconds(2));
  EXPECT_FALSE(cert.is_ca());

  EXPECT_EQ(validate_chain(cert, fx.anchors(), now), "p-xyz");
  EXPECT_EQ(validate_chain(cert, std::vector<Certificate>{fx.root}, now, std::vector<Certificate>{fx.intermediate}),
            "p-xyz");
  EXPECT_EQ(validate_error(cert, fx.anchors(), now + hours(25)), Errc::Expired);
  EXPECT_EQ(validate_error(cert, fx.anchors(), cert.not_after() + seconds(1)), Errc::Expired);
  EXPECT_EQ(validate_error(cert, fx.anchors(), now - hours(1)), Errc::NotYetValid);
}

TEST(Pki, ForeignAuthority) {
  const auto now = std::chrono::system_clock::now();
  auto other_key = KeyPair::generate(1024);
  auto other = make_self_signed_ca(other_key, "Other UCA", now, hours(48));
  auto k = KeyPair::generate(1024);
  auto cert = issue_certificate(IssuerConfig{{other}, other_key, hours(1)},
                                build_csr(k, "p-1"), now);
  EXPECT_EQ(validate_error(cert, shared_pki().anchors(), now), Errc::UnknownAuthority);
}

TEST(Pki, SelfSignedUcaAlone) {
  const auto now = std::chrono::system_clock::now();
  auto uca_key = KeyPair::generate(1024);
  auto uca = make_self_signed_ca(uca_key, "Users CA", now, hours(48));
  EXPECT_TRUE(uca.self_signed());
  EXPECT_TRUE(uca.is_ca());
  auto k = KeyPair::generate(1024);
  auto cert = issue_certificate(IssuerConfig{{uca}, uca_key, hours(1)}, build_csr(k, "p-2"), now);
  EXPECT_EQ(validate_chain(cert, std::vector<Certificate>{uca}, now), "p-2");
}

TEST(Pki, CommonNamePreservedProperty) {
  const auto& fx = shared_pki();
  const auto now = std::chrono::system_clock::now();
  auto k = KeyPair::generate(1024);
  std::string printable;
  for (char c = 0x20; c < 0x7f; ++c) printable += c;
  for (std::size_t len : {1, 2, 17, 63, 64}) {
    for (std::size_t off = 0; off < printable.size(); off += 19) {
      std::string cn;
      for (std::size_t i = 0; i < len; ++i) cn += printable[(off + i * 5) % printable.size()];
      if (cn.front() == ' ') cn.front() = 'x';
      auto cert = issue_certificate(fx.issuer(), build_csr(k, cn), now);
      EXPECT_EQ(cert.subject_common_name(), cn);
    }
  }
}

TEST(Pki, IssuerKeyMustMatch) {
  const auto& fx = shared_pki();
  IssuerConfig bad{{fx.intermediate}, fx.root_key, hours(1)};
  try {
    check_issuer(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ConfigError);
  }
  EXPECT_NO_THROW(check_issuer(fx.issuer()));
}

TEST(Pki, ChainSerialization) {
  const auto& fx = shared_pki();
  auto chain = fx.server_chain();
  EXPECT_EQ(Certificate::chain_from_pem(chain_to_pem(chain)), chain);
  EXPECT_EQ(Certificate::chain_from_der(chain_to_der(chain)), chain);
  auto der = chain_to_der(chain);
  der.pop_back();
  EXPECT_THROW(Certificate::chain_from_der(der), Error);

  testing::TempDir dir;
  save_chain(dir / "chain.pem", chain);
  EXPECT_EQ(Certificate::load_chain(dir / "chain.pem"), chain);
  EXPECT_EQ(Certificate::load_anchors(dir.path()).size(), 2u);
}

}  // namespace
}  // namespace eapsh
