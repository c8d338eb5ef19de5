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

#pragma once

#include <openssl/ossl_typ.h>
#include <openssl/x509.h>

#include <chrono>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eapsh/bytes.hpp"
#include "eapsh/clock.hpp"

namespace eapsh {

inline constexpr int kDefaultUserKeyBits = 2048;
inline constexpr Seconds kDefaultUserCertValidity{24 * 3600};

bool is_allowed_key_size(int bits);

// An RSA key pair. Cheap to copy; copies share the underlying key.
class KeyPair {
 public:
  // Throws Error(BadKeySize) unless bits is 1024, 2048, 3072 or 4096.
  static KeyPair generate(int bits);
  // PEM private key, optionally encrypted. Throws Error(Malformed).
  static KeyPair from_pem(std::string_view pem, std::string_view password = {});
  static KeyPair load(const std::filesystem::path& path, std::string_view password = {});

  int bits() const;
  // DER SubjectPublicKeyInfo; the identity of the public half.
  Bytes public_der() const;
  std::string to_pem(std::string_view password = {}) const;
  void save(const std::filesystem::path& path, std::string_view password = {}) const;

  Bytes sign(ByteView message) const;
  bool verify(ByteView message, ByteView signature) const;

  EVP_PKEY* native() const { return key_.get(); }
  explicit KeyPair(std::shared_ptr<EVP_PKEY> key) : key_(std::move(key)) {}

 private:
  std::shared_ptr<EVP_PKEY> key_;
};

inline KeyPair generate_keypair(int bits) { return KeyPair::generate(bits); }

class Certificate {
 public:
  static Certificate from_der(ByteView der);
  static Certificate from_pem(std::string_view pem);
  // Every certificate in a PEM bundle, in file order.
  static std::vector<Certificate> chain_from_pem(std::string_view pem);
  // Back-to-back DER certificates. Throws Error(Malformed).
  static std::vector<Certificate> chain_from_der(ByteView der);
  static std::vector<Certificate> load_chain(const std::filesystem::path& path);
  // Reads every *.pem / *.crt file of a directory, or a single bundle file.
  static std::vector<Certificate> load_anchors(const std::filesystem::path& path);

  std::string subject_common_name() const;
  std::string issuer_common_name() const;
  Bytes public_der() const;
  SystemTime not_before() const;
  SystemTime not_after() const;
  bool is_ca() const;
  bool self_signed() const;

  Bytes der() const;
  std::string pem() const;

  bool operator==(const Certificate& other) const { return der() == other.der(); }

  X509* native() const { return cert_.get(); }
  explicit Certificate(std::shared_ptr<X509> cert) : cert_(std::move(cert)) {}

 private:
  std::shared_ptr<X509> cert_;
};

std::string chain_to_pem(std::span<const Certificate> chain);
Bytes chain_to_der(std::span<const Certificate> chain);
void save_chain(const std::filesystem::path& path, std::span<const Certificate> chain);

class CertSigningRequest {
 public:
  std::string subject_common_name() const;
  Bytes public_der() const;
  Bytes der() const;
  std::string pem() const;

  X509_REQ* native() const { return req_.get(); }
  explicit CertSigningRequest(std::shared_ptr<X509_REQ> req) : req_(std::move(req)) {}

 private:
  std::shared_ptr<X509_REQ> req_;
};

// Classic PKCS#10 request signed with SHA-256. The common name is carried
// verbatim as a UTF8String; pseudonyms are longer than the 64-character
// X.520 bound, which is therefore not enforced. Throws Error(BadName).
CertSigningRequest build_csr(const KeyPair& pair, std::string_view common_name);
// Throws Error(Malformed) or Error(BadSelfSignature).
CertSigningRequest parse_csr(ByteView der);

struct IssuerConfig {
  // Issuing CA first, then up to the root.
  std::vector<Certificate> ca_chain;
  KeyPair ca_key;
  Seconds validity = kDefaultUserCertValidity;
};

// Throws Error(ConfigError) if ca_key does not match ca_chain.front().
void check_issuer(const IssuerConfig& issuer);

// Leaf client certificate valid over [now, now + validity].
Certificate issue_certificate(const IssuerConfig& issuer, const CertSigningRequest& csr,
                              SystemTime now);

// Returns the subject CN when cert chains to one of the anchors at time `at`.
// Anchors are trusted as-is, so an intermediate alone is enough.
// Throws Error(UnknownAuthority), Error(Expired) or Error(NotYetValid).
std::string validate_chain(const Certificate& cert, std::span<const Certificate> anchors,
                           SystemTime at,
                           std::span<const Certificate> untrusted = {});

// Desk-scale hierarchy: root CA -> intermediate CA -> AS server certificate.
// The intermediate also acts as the Users' CA.
struct PkiFixture {
  Certificate root;
  KeyPair root_key;
  Certificate intermediate;
  KeyPair intermediate_key;
  Certificate server;
  KeyPair server_key;

  std::vector<Certificate> server_chain() const { return {server, intermediate}; }
  std::vector<Certificate> anchors() const { return {root, intermediate}; }
  IssuerConfig issuer(Seconds validity = kDefaultUserCertValidity) const {
    return IssuerConfig{{intermediate, root}, intermediate_key, validity};
  }
};

PkiFixture make_pki_fixture(SystemTime now, int key_bits = 2048,
                            std::string_view server_cn = "as.eapsh.test");

// Self-signed CA certificate, used for the root and for standalone UCAs.
Certificate make_self_signed_ca(const KeyPair& key, std::string_view cn, SystemTime now,
                                Seconds lifetime);

}  // namespace eapsh
