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

#include "eapsh/pki.hpp"

#include <openssl/pem.h>
#include <openssl/rand.h>
#include <openssl/rsa.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "eapsh/error.hpp"
#include "ossl.hpp"

namespace eapsh {

namespace ossl {

std::string last_error() {
  std::string out;
  while (unsigned long e = ERR_get_error()) {
    char buf[256];
    ERR_error_string_n(e, buf, sizeof(buf));
    if (!out.empty()) out += "; ";
    out += buf;
  }
  return out;
}

void fail(Errc code, const std::string& what) {
  auto detail = last_error();
  throw Error(code, detail.empty() ? what : what + " (" + detail + ")");
}

Bytes drain(BIO* bio) {
  char* data = nullptr;
  long n = BIO_get_mem_data(bio, &data);
  Bytes out(data, data + (n > 0 ? n : 0));
  (void)BIO_reset(bio);
  return out;
}

std::string drain_string(BIO* bio) {
  auto b = drain(bio);
  return std::string(b.begin(), b.end());
}

BioPtr mem_bio(ByteView data) {
  // BIO_new_mem_buf is read-only and does not copy; keep the source alive.
  return BioPtr(check_ptr(BIO_new_mem_buf(data.data(), static_cast<int>(data.size())),
                          Errc::IoError, "BIO_new_mem_buf"));
}

}  // namespace ossl

namespace {

std::shared_ptr<X509> share(X509* x) { return std::shared_ptr<X509>(x, X509_free); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view data, bool secret) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(Errc::IoError, "short write to " + path.string());
  out.close();
  if (secret) {
    std::error_code ec;
    std::filesystem::permissions(path,
                                 std::filesystem::perms::owner_read |
                                     std::filesystem::perms::owner_write,
                                 ec);
  }
}

std::string name_cn(const X509_NAME* name) {
  int idx = X509_NAME_get_index_by_NID(name, NID_commonName, -1);
  if (idx < 0) return {};
  const ASN1_STRING* data = X509_NAME_ENTRY_get_data(X509_NAME_get_entry(name, idx));
  return std::string(reinterpret_cast<const char*>(ASN1_STRING_get0_data(data)),
                     static_cast<std::size_t>(ASN1_STRING_length(data)));
}

Bytes pubkey_der(EVP_PKEY* key) {
  unsigned char* buf = nullptr;
  int n = i2d_PUBKEY(key, &buf);
  if (n <= 0) ossl::fail(Errc::Malformed, "i2d_PUBKEY");
  Bytes out(buf, buf + n);
  OPENSSL_free(buf);
  return out;
}

SystemTime asn1_to_time(const ASN1_TIME* t) {
  struct tm tm {};
  if (ASN1_TIME_to_tm(t, &tm) != 1) ossl::fail(Errc::Malformed, "ASN1_TIME_to_tm");
  return from_unix(static_cast<std::int64_t>(timegm(&tm)));
}

void add_ext(X509* cert, X509* issuer, int nid, const char* value) {
  X509V3_CTX ctx;
  X509V3_set_ctx_nodb(&ctx);
  X509V3_set_ctx(&ctx, issuer, cert, nullptr, nullptr, 0);
  ossl::X509ExtPtr ext(X509V3_EXT_conf_nid(nullptr, &ctx, nid, value));
  if (!ext) ossl::fail(Errc::ConfigError, "X509V3_EXT_conf_nid");
  ossl::check(X509_add_ext(cert, ext.get(), -1), Errc::ConfigError, "X509_add_ext");
}

void set_random_serial(X509* cert) {
  unsigned char raw[16];
  if (RAND_bytes(raw, sizeof(raw)) != 1) ossl::fail(Errc::IoError, "RAND_bytes");
  raw[0] &= 0x7f;  // keep it positive
  raw[0] |= 0x01;
  ossl::BignumPtr bn(BN_bin2bn(raw, sizeof(raw), nullptr));
  ossl::check_ptr(BN_to_ASN1_INTEGER(bn.get(), X509_get_serialNumber(cert)),
                  Errc::ConfigError, "serial");
}

void set_validity(X509* cert, SystemTime from, SystemTime to) {
  ossl::check_ptr(ASN1_TIME_set(X509_getm_notBefore(cert), static_cast<time_t>(to_unix(from))),
                  Errc::ConfigError, "notBefore");
  ossl::check_ptr(ASN1_TIME_set(X509_getm_notAfter(cert), static_cast<time_t>(to_unix(to))),
                  Errc::ConfigError, "notAfter");
}

void set_cn(X509_NAME* name, std::string_view cn) {
  ossl::check(X509_NAME_add_entry_by_NID(
                  name, NID_commonName, V_ASN1_UTF8STRING,
                  reinterpret_cast<const unsigned char*>(cn.data()),
                  static_cast<int>(cn.size()), -1, 0),
              Errc::BadName, "X509_NAME_add_entry_by_NID");
}

// Certificate signed by issuer_key; issuer == nullptr means self-signed.
Certificate make_cert(const KeyPair& subject_key, std::string_view cn, X509* issuer,
                      const KeyPair& issuer_key, SystemTime from, SystemTime to,
                      bool ca, const char* eku) {
  ossl::X509Ptr cert(ossl::check_ptr(X509_new(), Errc::ConfigError, "X509_new"));
  X509_set_version(cert.get(), 2);
  set_random_serial(cert.get());
  set_validity(cert.get(), from, to);
  set_cn(X509_get_subject_name(cert.get()), cn);
  X509* signer = issuer ? issuer : cert.get();
  ossl::check(X509_set_issuer_name(cert.get(), X509_get_subject_name(signer)),
              Errc::ConfigError, "issuer name");
  ossl::check(X509_set_pubkey(cert.get(), subject_key.native()), Errc::ConfigError, "pubkey");

  add_ext(cert.get(), signer, NID_subject_key_identifier, "hash");
  if (issuer) add_ext(cert.get(), signer, NID_authority_key_identifier, "keyid:always");
  if (ca) {
    add_ext(cert.get(), signer, NID_basic_constraints, "critical,CA:TRUE");
    add_ext(cert.get(), signer, NID_key_usage, "critical,keyCertSign,cRLSign,digitalSignature");
  } else {
    add_ext(cert.get(), signer, NID_basic_constraints, "critical,CA:FALSE");
    add_ext(cert.get(), signer, NID_key_usage, "critical,digitalSignature,keyEncipherment");
    if (eku) add_ext(cert.get(), signer, NID_ext_key_usage, eku);
  }
  if (X509_sign(cert.get(), issuer_key.native(), EVP_sha256()) <= 0) {
    ossl::fail(Errc::ConfigError, "X509_sign");
  }
  return Certificate(share(cert.release()));
}

}  // namespace

bool is_allowed_key_size(int bits) {
  return bits == 1024 || bits == 2048 || bits == 3072 || bits == 4096;
}

// ---- KeyPair ----

KeyPair KeyPair::generate(int bits) {
  if (!is_allowed_key_size(bits)) {
    throw Error(Errc::BadKeySize, std::to_string(bits) + " bits");
  }
  ossl::PKeyCtxPtr ctx(EVP_PKEY_CTX_new_id(EVP_PKEY_RSA, nullptr));
  if (!ctx) ossl::fail(Errc::KeyGenFailure, "EVP_PKEY_CTX_new_id");
  ossl::check(EVP_PKEY_keygen_init(ctx.get()), Errc::KeyGenFailure, "keygen_init");
  if (EVP_PKEY_CTX_set_rsa_keygen_bits(ctx.get(), bits) <= 0) {
    ossl::fail(Errc::KeyGenFailure, "set_rsa_keygen_bits");
  }
  EVP_PKEY* raw = nullptr;
  ossl::check(EVP_PKEY_keygen(ctx.get(), &raw), Errc::KeyGenFailure, "EVP_PKEY_keygen");
  return KeyPair(std::shared_ptr<EVP_PKEY>(raw, EVP_PKEY_free));
}

KeyPair KeyPair::from_pem(std::string_view pem, std::string_view password) {
  auto bio = ossl::mem_bio({reinterpret_cast<const std::uint8_t*>(pem.data()), pem.size()});
  std::string pw(password);
  EVP_PKEY* key = PEM_read_bio_PrivateKey(bio.get(), nullptr, nullptr,
                                          pw.empty() ? nullptr : pw.data());
  if (!key) ossl::fail(Errc::Malformed, "private key PEM (wrong password?)");
  return KeyPair(std::shared_ptr<EVP_PKEY>(key, EVP_PKEY_free));
}

KeyPair KeyPair::load(const std::filesystem::path& path, std::string_view password) {
  return from_pem(read_file(path), password);
}

int KeyPair::bits() const { return EVP_PKEY_bits(key_.get()); }

Bytes KeyPair::public_der() const { return pubkey_der(key_.get()); }

std::string KeyPair::to_pem(std::string_view password) const {
  ossl::BioPtr bio(BIO_new(BIO_s_mem()));
  std::string pw(password);
  const EVP_CIPHER* cipher = pw.empty() ? nullptr : EVP_aes_256_cbc();
  ossl::check(PEM_write_bio_PrivateKey(
                  bio.get(), key_.get(), cipher,
                  pw.empty() ? nullptr : reinterpret_cast<unsigned char*>(pw.data()),
                  static_cast<int>(pw.size()), nullptr, nullptr),
              Errc::IoError, "PEM_write_bio_PrivateKey");
  return ossl::drain_string(bio.get());
}

void KeyPair::save(const std::filesystem::path& path, std::string_view password) const {
  write_file(path, to_pem(password), true);
}

Bytes KeyPair::sign(ByteView message) const {
  ossl::MdCtxPtr ctx(EVP_MD_CTX_new());
  ossl::check(EVP_DigestSignInit(ctx.get(), nullptr, EVP_sha256(), nullptr, key_.get()),
              Errc::Malformed, "DigestSignInit");
  std::size_t len = 0;
  ossl::check(EVP_DigestSign(ctx.get(), nullptr, &len, message.data(), message.size()),
              Errc::Malformed, "DigestSign");
  Bytes sig(len);
  ossl::check(EVP_DigestSign(ctx.get(), sig.data(), &len, message.data(), message.size()),
              Errc::Malformed, "DigestSign");
  sig.resize(len);
  return sig;
}

bool KeyPair::verify(ByteView message, ByteView signature) const {
  ossl::MdCtxPtr ctx(EVP_MD_CTX_new());
  if (EVP_DigestVerifyInit(ctx.get(), nullptr, EVP_sha256(), nullptr, key_.get()) != 1) {
    return false;
  }
  int rc = EVP_DigestVerify(ctx.get(), signature.data(), signature.size(), message.data(),
                            message.size());
  ERR_clear_error();
  return rc == 1;
}

// ---- Certificate ----

Certificate Certificate::from_der(ByteView der) {
  const unsigned char* p = der.data();
  X509* x = d2i_X509(nullptr, &p, static_cast<long>(der.size()));
  if (!x) ossl::fail(Errc::Malformed, "d2i_X509");
  if (p != der.data() + der.size()) {
    X509_free(x);
    throw Error(Errc::Malformed, "trailing bytes after certificate");
  }
  return Certificate(share(x));
}

std::vector<Certificate> Certificate::chain_from_der(ByteView der) {
  std::vector<Certificate> out;
  const unsigned char* p = der.data();
  const unsigned char* end = der.data() + der.size();
  while (p < end) {
    X509* x = d2i_X509(nullptr, &p, static_cast<long>(end - p));
    if (!x) ossl::fail(Errc::Malformed, "d2i_X509");
    out.push_back(Certificate(share(x)));
  }
  return out;
}

Certificate Certificate::from_pem(std::string_view pem) {
  auto chain = chain_from_pem(pem);
  if (chain.empty()) throw Error(Errc::Malformed, "no certificate in PEM");
  return chain.front();
}

std::vector<Certificate> Certificate::chain_from_pem(std::string_view pem) {
  auto bio = ossl::mem_bio({reinterpret_cast<const std::uint8_t*>(pem.data()), pem.size()});
  std::vector<Certificate> out;
  while (X509* x = PEM_read_bio_X509(bio.get(), nullptr, nullptr, nullptr)) {
    out.emplace_back(share(x));
  }
  ERR_clear_error();  // end-of-data is reported as an error
  return out;
}

std::vector<Certificate> Certificate::load_chain(const std::filesystem::path& path) {
  auto chain = chain_from_pem(read_file(path));
  if (chain.empty()) throw Error(Errc::Malformed, "no certificate in " + path.string());
  return chain;
}

std::vector<Certificate> Certificate::load_anchors(const std::filesystem::path& path) {
  std::vector<Certificate> out;
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(path)) {
      auto ext = entry.path().extension();
      if (entry.is_regular_file() && (ext == ".pem" || ext == ".crt")) {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      auto chain = chain_from_pem(read_file(f));
      out.insert(out.end(), chain.begin(), chain.end());
    }
  } else {
    out = chain_from_pem(read_file(path));
  }
  return out;
}

std::string Certificate::subject_common_name() const {
  return name_cn(X509_get_subject_name(cert_.get()));
}

std::string Certificate::issuer_common_name() const {
  return name_cn(X509_get_issuer_name(cert_.get()));
}

Bytes Certificate::public_der() const {
  return pubkey_der(X509_get0_pubkey(cert_.get()));
}

SystemTime Certificate::not_before() const {
  return asn1_to_time(X509_get0_notBefore(cert_.get()));
}

SystemTime Certificate::not_after() const {
  return asn1_to_time(X509_get0_notAfter(cert_.get()));
}

bool Certificate::is_ca() const { return X509_check_ca(cert_.get()) != 0; }

bool Certificate::self_signed() const {
  return X509_check_issued(cert_.get(), cert_.get()) == X509_V_OK;
}

Bytes Certificate::der() const {
  unsigned char* buf = nullptr;
  int n = i2d_X509(cert_.get(), &buf);
  if (n <= 0) ossl::fail(Errc::Malformed, "i2d_X509");
  Bytes out(buf, buf + n);
  OPENSSL_free(buf);
  return out;
}

std::string Certificate::pem() const {
  ossl::BioPtr bio(BIO_new(BIO_s_mem()));
  ossl::check(PEM_write_bio_X509(bio.get(), cert_.get()), Errc::IoError, "PEM_write_bio_X509");
  return ossl::drain_string(bio.get());
}

std::string chain_to_pem(std::span<const Certificate> chain) {
  std::string out;
  for (const auto& c : chain) out += c.pem();
  return out;
}

Bytes chain_to_der(std::span<const Certificate> chain) {
  Bytes out;
  for (const auto& c : chain) append(out, c.der());
  return out;
}

void save_chain(const std::filesystem::path& path, std::span<const Certificate> chain) {
  write_file(path, chain_to_pem(chain), false);
}

// ---- CSR ----

std::string CertSigningRequest::subject_common_name() const {
  return name_cn(X509_REQ_get_subject_name(req_.get()));
}

Bytes CertSigningRequest::public_der() const {
  return pubkey_der(X509_REQ_get0_pubkey(req_.get()));
}

Bytes CertSigningRequest::der() const {
  unsigned char* buf = nullptr;
  int n = i2d_X509_REQ(req_.get(), &buf);
  if (n <= 0) ossl::fail(Errc::Malformed, "i2d_X509_REQ");
  Bytes out(buf, buf + n);
  OPENSSL_free(buf);
  return out;
}

std::string CertSigningRequest::pem() const {
  ossl::BioPtr bio(BIO_new(BIO_s_mem()));
  ossl::check(PEM_write_bio_X509_REQ(bio.get(), req_.get()), Errc::IoError, "PEM_write_bio_X509_REQ");
  return ossl::drain_string(bio.get());
}

CertSigningRequest build_csr(const KeyPair& pair, std::string_view common_name) {
  if (common_name.empty()) throw Error(Errc::BadName, "empty common name");
  for (char c : common_name) {
    auto u = static_cast<unsigned char>(c);
    if (u < 0x20 || u > 0x7e) throw Error(Errc::BadName, "common name must be printable ASCII");
  }
  ossl::X509ReqPtr req(X509_REQ_new());
  ossl::check(X509_REQ_set_version(req.get(), 0), Errc::KeyGenFailure, "X509_REQ_set_version");
  set_cn(X509_REQ_get_subject_name(req.get()), common_name);
  ossl::check(X509_REQ_set_pubkey(req.get(), pair.native()), Errc::KeyGenFailure, "set_pubkey");
  if (X509_REQ_sign(req.get(), pair.native(), EVP_sha256()) <= 0) {
    ossl::fail(Errc::KeyGenFailure, "X509_REQ_sign");
  }
  return CertSigningRequest(std::shared_ptr<X509_REQ>(req.release(), X509_REQ_free));
}

CertSigningRequest parse_csr(ByteView der) {
  const unsigned char* p = der.data();
  ossl::X509ReqPtr req(d2i_X509_REQ(nullptr, &p, static_cast<long>(der.size())));
  if (!req) ossl::fail(Errc::Malformed, "d2i_X509_REQ");
  if (p != der.data() + der.size()) throw Error(Errc::Malformed, "trailing bytes after CSR");
  EVP_PKEY* key = X509_REQ_get0_pubkey(req.get());
  if (!key) throw Error(Errc::Malformed, "CSR without public key");
  if (X509_REQ_verify(req.get(), key) != 1) {
    ERR_clear_error();
    throw Error(Errc::BadSelfSignature, "CSR self-signature does not verify");
  }
  CertSigningRequest out(std::shared_ptr<X509_REQ>(req.release(), X509_REQ_free));
  if (out.subject_common_name().empty()) throw Error(Errc::Malformed, "CSR without common name");
  return out;
}

// ---- issuance and validation ----

void check_issuer(const IssuerConfig& issuer) {
  if (issuer.ca_chain.empty()) throw Error(Errc::ConfigError, "issuer chain is empty");
  if (X509_check_private_key(issuer.ca_chain.front().native(), issuer.ca_key.native()) != 1) {
    ERR_clear_error();
    throw Error(Errc::ConfigError, "issuer key does not match issuing certificate");
  }
  if (issuer.validity <= Seconds(0)) throw Error(Errc::ConfigError, "validity must be positive");
}

Certificate issue_certificate(const IssuerConfig& issuer, const CertSigningRequest& csr,
                              SystemTime now) {
  check_issuer(issuer);
  const auto& ca = issuer.ca_chain.front();
  ossl::X509Ptr cert(X509_new());
  X509_set_version(cert.get(), 2);
  set_random_serial(cert.get());
  set_validity(cert.get(), now, now + issuer.validity);
  set_cn(X509_get_subject_name(cert.get()), csr.subject_common_name());
  ossl::check(X509_set_issuer_name(cert.get(), X509_get_subject_name(ca.native())),
              Errc::ConfigError, "issuer name");
  ossl::check(X509_set_pubkey(cert.get(), X509_REQ_get0_pubkey(csr.native())),
              Errc::ConfigError, "pubkey");
  add_ext(cert.get(), ca.native(), NID_basic_constraints, "critical,CA:FALSE");
  add_ext(cert.get(), ca.native(), NID_key_usage, "critical,digitalSignature,keyEncipherment");
  add_ext(cert.get(), ca.native(), NID_ext_key_usage, "clientAuth");
  add_ext(cert.get(), ca.native(), NID_subject_key_identifier, "hash");
  add_ext(cert.get(), ca.native(), NID_authority_key_identifier, "keyid:always");
  if (X509_sign(cert.get(), issuer.ca_key.native(), EVP_sha256()) <= 0) {
    ossl::fail(Errc::ConfigError, "X509_sign");
  }
  return Certificate(share(cert.release()));
}

std::string validate_chain(const Certificate& cert, std::span<const Certificate> anchors,
                           SystemTime at, std::span<const Certificate> untrusted) {
  ossl::X509StorePtr store(X509_STORE_new());
  for (const auto& a : anchors) X509_STORE_add_cert(store.get(), a.native());
  ERR_clear_error();  // duplicate anchors are harmless

  STACK_OF(X509)* chain = sk_X509_new_null();
  for (const auto& u : untrusted) sk_X509_push(chain, u.native());

  ossl::X509StoreCtxPtr ctx(X509_STORE_CTX_new());
  X509_STORE_CTX_init(ctx.get(), store.get(), cert.native(), chain);
  X509_VERIFY_PARAM* param = X509_STORE_CTX_get0_param(ctx.get());
  X509_VERIFY_PARAM_set_flags(param, X509_V_FLAG_PARTIAL_CHAIN);
  X509_VERIFY_PARAM_set_time(param, static_cast<time_t>(to_unix(at)));

  int ok = X509_verify_cert(ctx.get());
  int err = X509_STORE_CTX_get_error(ctx.get());
  sk_X509_free(chain);
  ERR_clear_error();
  if (ok == 1) return cert.subject_common_name();

  std::string reason = X509_verify_cert_error_string(err);
  switch (err) {
    case X509_V_ERR_CERT_HAS_EXPIRED: throw Error(Errc::Expired, reason);
    case X509_V_ERR_CERT_NOT_YET_VALID: throw Error(Errc::NotYetValid, reason);
    default: throw Error(Errc::UnknownAuthority, reason);
  }
}

Certificate make_self_signed_ca(const KeyPair& key, std::string_view cn, SystemTime now,
                                Seconds lifetime) {
  return make_cert(key, cn, nullptr, key, now - Seconds(60), now + lifetime, true, nullptr);
}

PkiFixture make_pki_fixture(SystemTime now, int key_bits, std::string_view server_cn) {
  constexpr Seconds kYear{365 * 24 * 3600};
  auto root_key = KeyPair::generate(key_bits);
  auto root = make_self_signed_ca(root_key, "eapsh Root CA", now, 10 * kYear);
  auto inter_key = KeyPair::generate(key_bits);
  auto inter = make_cert(inter_key, "eapsh Intermediate CA", root.native(), root_key,
                         now - Seconds(60), now + 5 * kYear, true, nullptr);
  auto server_key = KeyPair::generate(key_bits);
  auto server = make_cert(server_key, server_cn, inter.native(), inter_key,
                          now - Seconds(60), now + 2 * kYear, false, "serverAuth");
  return PkiFixture{root, root_key, inter, inter_key, server, server_key};
}

}  // namespace eapsh
