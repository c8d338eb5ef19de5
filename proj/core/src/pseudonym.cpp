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

#include "eapsh/pseudonym.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>

#include "eapsh/error.hpp"
#include "ossl.hpp"

namespace eapsh {

namespace {

constexpr std::size_t kBlock = 16;

std::array<std::uint8_t, kPseudonymMacSize> mac_over(const PseudonymKey& key, ByteView data) {
  std::array<std::uint8_t, kPseudonymMacSize> mac{};
  unsigned int len = 0;
  if (!HMAC(EVP_sha1(), key.k.data(), static_cast<int>(key.k.size()), data.data(), data.size(),
            mac.data(), &len) ||
      len != mac.size()) {
    ossl::fail(Errc::IntegrityFailure, "HMAC-SHA1");
  }
  return mac;
}

std::string base64_encode(ByteView data) {
  std::string out(4 * ((data.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data.data(),
                          static_cast<int>(data.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

// Strict standard-alphabet Base64 with padding.
Bytes base64_decode(std::string_view text) {
  if (text.empty() || text.size() % 4 != 0) throw Error(Errc::BadEncoding, "length");
  std::size_t pad = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    bool alpha = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                 (c >= '0' && c <= '9') || c == '+' || c == '/';
    if (c == '=') {
      if (i + 2 < text.size()) throw Error(Errc::BadEncoding, "padding position");
      ++pad;
    } else if (!alpha || pad > 0) {
      throw Error(Errc::BadEncoding, "alphabet");
    }
  }
  Bytes out(text.size() / 4 * 3);
  int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                          static_cast<int>(text.size()));
  if (n < 0) throw Error(Errc::BadEncoding, "decode");
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

}  // namespace

PseudonymKey PseudonymKey::generate(RandomSource& rng) {
  PseudonymKey key;
  rng.fill(key.k);
  return key;
}

Pseudonym generate_pseudonym(std::string_view identity, const PseudonymKey& key,
                             const PseudonymIv& iv) {
  if (identity.empty() || identity.size() > kMaxIdentityLength) {
    throw Error(Errc::BadIdentity, "identity must be 1..255 bytes");
  }
  ossl::CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
  ossl::check(EVP_EncryptInit_ex(ctx.get(), EVP_aes_128_cbc(), nullptr, key.k.data(), iv.data()),
              Errc::BadIdentity, "EncryptInit");

  Bytes blob(iv.begin(), iv.end());
  blob.resize(kPseudonymIvSize + identity.size() + kBlock);
  int n1 = 0;
  int n2 = 0;
  ossl::check(EVP_EncryptUpdate(ctx.get(), blob.data() + kPseudonymIvSize, &n1,
                                reinterpret_cast<const unsigned char*>(identity.data()),
                                static_cast<int>(identity.size())),
              Errc::BadIdentity, "EncryptUpdate");
  ossl::check(EVP_EncryptFinal_ex(ctx.get(), blob.data() + kPseudonymIvSize + n1, &n2),
              Errc::BadIdentity, "EncryptFinal");
  blob.resize(kPseudonymIvSize + static_cast<std::size_t>(n1 + n2));

  auto mac = mac_over(key, blob);
  append(blob, mac);
  return Pseudonym{base64_encode(blob)};
}

Pseudonym generate_pseudonym(std::string_view identity, const PseudonymKey& key,
                             RandomSource& rng) {
  PseudonymIv iv;
  rng.fill(iv);
  return generate_pseudonym(identity, key, iv);
}

std::string resolve_pseudonym(const Pseudonym& pseudonym, const PseudonymKey& key) {
  Bytes blob = base64_decode(pseudonym.text);
  if (blob.size() < kPseudonymIvSize + kBlock + kPseudonymMacSize ||
      (blob.size() - kPseudonymIvSize - kPseudonymMacSize) % kBlock != 0) {
    throw Error(Errc::BadEncoding, "unexpected decoded length");
  }
  const std::size_t body = blob.size() - kPseudonymMacSize;
  auto expected = mac_over(key, ByteView(blob).first(body));
  if (CRYPTO_memcmp(expected.data(), blob.data() + body, kPseudonymMacSize) != 0) {
    throw Error(Errc::IntegrityFailure, "pseudonym MAC mismatch");
  }

  ossl::CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
  ossl::check(EVP_DecryptInit_ex(ctx.get(), EVP_aes_128_cbc(), nullptr, key.k.data(),
                                 blob.data()),
              Errc::BadPadding, "DecryptInit");
  const std::size_t clen = body - kPseudonymIvSize;
  Bytes plain(clen + kBlock);
  int n1 = 0;
  int n2 = 0;
  ossl::check(EVP_DecryptUpdate(ctx.get(), plain.data(), &n1, blob.data() + kPseudonymIvSize,
                                static_cast<int>(clen)),
              Errc::BadPadding, "DecryptUpdate");
  if (EVP_DecryptFinal_ex(ctx.get(), plain.data() + n1, &n2) != 1) {
    ERR_clear_error();
    throw Error(Errc::BadPadding, "bad PKCS#7 padding");
  }
  plain.resize(static_cast<std::size_t>(n1 + n2));
  if (plain.empty()) throw Error(Errc::BadPadding, "empty identity");
  return to_string(plain);
}

void PseudonymCache::insert(const Pseudonym& pseudonym, SystemTime now) {
  std::lock_guard lock(mu_);
  entries_[pseudonym.text] = now;
}

bool PseudonymCache::take_fresh(std::string_view common_name, SystemTime now, Seconds window) {
  std::lock_guard lock(mu_);
  for (auto it = entries_.begin(); it != entries_.end();) {
    if (now - it->second > window) {
      it = entries_.erase(it);
    } else {
      ++it;
    }
  }
  auto it = entries_.find(std::string(common_name));
  if (it == entries_.end()) return false;
  const bool fresh = now >= it->second;
  entries_.erase(it);
  return fresh;
}

std::size_t PseudonymCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

void PseudonymCache::clear() {
  std::lock_guard lock(mu_);
  entries_.clear();
}

}  // namespace eapsh
