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

#include <openssl/ocsp.h>

#include "eapsh/error.hpp"
#include "eapsh/tunnel.hpp"
#include "ossl.hpp"

namespace eapsh {

namespace {

constexpr Seconds kStatusLifetime{3600};
constexpr Seconds kStatusSkew{300};

const Certificate& issuer_of(const std::vector<Certificate>& chain, const Certificate& fallback) {
  return chain.size() > 1 ? chain[1] : fallback;
}

}  // namespace

StubStatusProvider::StubStatusProvider(Certificate issuer, KeyPair issuer_key,
                                       const Clock& clock, CertStatus answer)
    : issuer_(std::move(issuer)),
      issuer_key_(std::move(issuer_key)),
      clock_(clock),
      answer_(answer) {}

StapledStatus StubStatusProvider::staple(const std::vector<Certificate>& chain) {
  if (chain.empty()) throw Error(Errc::StatusUnavailable, "empty chain");
  const auto& leaf = chain.front();
  const auto& issuer = issuer_of(chain, issuer_);
  if (!(issuer == issuer_)) {
    throw Error(Errc::StatusUnavailable, "chain not issued by this responder");
  }

  ossl::OcspCertIdPtr id(OCSP_cert_to_id(EVP_sha1(), leaf.native(), issuer.native()));
  if (!id) ossl::fail(Errc::StatusUnavailable, "OCSP_cert_to_id");

  const auto now = clock_.now();
  ossl::Asn1TimePtr this_update(ASN1_TIME_set(nullptr, static_cast<time_t>(to_unix(now))));
  ossl::Asn1TimePtr next_update(
      ASN1_TIME_set(nullptr, static_cast<time_t>(to_unix(now + kStatusLifetime))));

  int status = V_OCSP_CERTSTATUS_GOOD;
  int reason = 0;
  ASN1_TIME* revoked_at = nullptr;
  ossl::Asn1TimePtr revoked_holder;
  if (answer_ == CertStatus::Revoked) {
    status = V_OCSP_CERTSTATUS_REVOKED;
    reason = OCSP_REVOKED_STATUS_KEYCOMPROMISE;
    revoked_holder.reset(ASN1_TIME_set(nullptr, static_cast<time_t>(to_unix(now))));
    revoked_at = revoked_holder.get();
  } else if (answer_ == CertStatus::Unknown) {
    status = V_OCSP_CERTSTATUS_UNKNOWN;
  }

  ossl::OcspBasicPtr basic(OCSP_BASICRESP_new());
  if (!OCSP_basic_add1_status(basic.get(), id.get(), status, reason, revoked_at,
                              this_update.get(), next_update.get())) {
    ossl::fail(Errc::StatusUnavailable, "OCSP_basic_add1_status");
  }
  if (OCSP_basic_sign(basic.get(), issuer_.native(), issuer_key_.native(), EVP_sha256(),
                      nullptr, 0) != 1) {
    ossl::fail(Errc::StatusUnavailable, "OCSP_basic_sign");
  }
  ossl::OcspRespPtr resp(OCSP_response_create(OCSP_RESPONSE_STATUS_SUCCESSFUL, basic.get()));
  if (!resp) ossl::fail(Errc::StatusUnavailable, "OCSP_response_create");

  unsigned char* buf = nullptr;
  int n = i2d_OCSP_RESPONSE(resp.get(), &buf);
  if (n <= 0) ossl::fail(Errc::StatusUnavailable, "i2d_OCSP_RESPONSE");
  StapledStatus out{Bytes(buf, buf + n)};
  OPENSSL_free(buf);
  return out;
}

StapledStatus staple_status(StatusProvider& provider, const std::vector<Certificate>& chain) {
  return provider.staple(chain);
}

CertStatus check_stapled_status(ByteView der, const Certificate& leaf,
                                const std::vector<Certificate>& chain,
                                const std::vector<Certificate>& anchors, SystemTime now) {
  const unsigned char* p = der.data();
  ossl::OcspRespPtr resp(d2i_OCSP_RESPONSE(nullptr, &p, static_cast<long>(der.size())));
  if (!resp) ossl::fail(Errc::StatusUnavailable, "unparsable OCSP response");
  if (OCSP_response_status(resp.get()) != OCSP_RESPONSE_STATUS_SUCCESSFUL) {
    throw Error(Errc::StatusUnavailable, "OCSP responder status not successful");
  }
  ossl::OcspBasicPtr basic(OCSP_response_get1_basic(resp.get()));
  if (!basic) ossl::fail(Errc::StatusUnavailable, "no basic OCSP response");

  ossl::X509StorePtr store(X509_STORE_new());
  for (const auto& a : anchors) X509_STORE_add_cert(store.get(), a.native());
  X509_VERIFY_PARAM* param = X509_STORE_get0_param(store.get());
  X509_VERIFY_PARAM_set_flags(param, X509_V_FLAG_PARTIAL_CHAIN);
  X509_VERIFY_PARAM_set_time(param, static_cast<time_t>(to_unix(now)));

  STACK_OF(X509)* untrusted = sk_X509_new_null();
  for (const auto& c : chain) sk_X509_push(untrusted, c.native());
  int verified = OCSP_basic_verify(basic.get(), untrusted, store.get(), 0);
  if (verified <= 0) {
    sk_X509_free(untrusted);
    ossl::fail(Errc::StatusUnavailable, "OCSP signature does not verify");
  }
  sk_X509_free(untrusted);

  if (chain.size() < 2) throw Error(Errc::StatusUnavailable, "issuer not in chain");
  ossl::OcspCertIdPtr id(OCSP_cert_to_id(EVP_sha1(), leaf.native(), chain[1].native()));
  int status = 0;
  int reason = 0;
  ASN1_GENERALIZEDTIME* revtime = nullptr;
  ASN1_GENERALIZEDTIME* this_update = nullptr;
  ASN1_GENERALIZEDTIME* next_update = nullptr;
  if (OCSP_resp_find_status(basic.get(), id.get(), &status, &reason, &revtime, &this_update,
                            &next_update) != 1) {
    throw Error(Errc::StatusUnavailable, "response does not cover the server certificate");
  }

  const auto t = static_cast<time_t>(to_unix(now));
  const auto skewed = static_cast<time_t>(to_unix(now + kStatusSkew));
  if (this_update == nullptr || ASN1_TIME_cmp_time_t(this_update, skewed) > 0) {
    throw Error(Errc::StatusUnavailable, "status not yet valid");
  }
  if (next_update == nullptr || ASN1_TIME_cmp_time_t(next_update, t) < 0) {
    throw Error(Errc::StatusUnavailable, "status expired");
  }
  ERR_clear_error();

  switch (status) {
    case V_OCSP_CERTSTATUS_GOOD: return CertStatus::Good;
    case V_OCSP_CERTSTATUS_REVOKED: return CertStatus::Revoked;
    default: return CertStatus::Unknown;
  }
}

}  // namespace eapsh
