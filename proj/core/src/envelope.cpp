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

#include "eapsh/envelope.hpp"

#include <algorithm>

#include "eapsh/error.hpp"

namespace eapsh {

namespace {

void put_u32(Bytes& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::uint32_t get_u32(ByteView b) {
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         b[3];
}

}  // namespace

Bytes encode_envelope(const Envelope& envelope) {
  Bytes out;
  out.reserve(kEnvelopeHeaderSize + envelope.payload.size());
  out.push_back(static_cast<std::uint8_t>(envelope.type));
  put_u32(out, envelope.session);
  put_u32(out, static_cast<std::uint32_t>(envelope.payload.size()));
  append(out, envelope.payload);
  return out;
}

Envelope decode_envelope(ByteView bytes) {
  if (bytes.size() < kEnvelopeHeaderSize) throw Error(Errc::Malformed, "envelope too short");
  const auto type = bytes[0];
  if (type < 1 || type > 4) throw Error(Errc::Malformed, "unknown envelope type");
  const auto len = get_u32(bytes.subspan(5, 4));
  if (bytes.size() - kEnvelopeHeaderSize != len) {
    throw Error(Errc::Malformed, "envelope length mismatch");
  }
  Envelope e;
  e.type = static_cast<EnvelopeType>(type);
  e.session = get_u32(bytes.subspan(1, 4));
  e.payload.assign(bytes.begin() + kEnvelopeHeaderSize, bytes.end());
  return e;
}

Envelope make_accept(std::uint32_t session, const Msk& msk, ByteView eap_success) {
  Envelope e{EnvelopeType::Accept, session, Bytes(msk.begin(), msk.end())};
  append(e.payload, eap_success);
  return e;
}

std::pair<Msk, Bytes> split_accept(const Envelope& accept) {
  if (accept.type != EnvelopeType::Accept || accept.payload.size() < kMskSize) {
    throw Error(Errc::Malformed, "not an Accept envelope");
  }
  Msk msk;
  std::copy_n(accept.payload.begin(), kMskSize, msk.begin());
  return {msk, Bytes(accept.payload.begin() + kMskSize, accept.payload.end())};
}

std::vector<Envelope> AsDispatcher::handle(const Envelope& in) {
  std::lock_guard lock(mu_);
  const auto reject = [&] {
    return std::vector<Envelope>{
        {EnvelopeType::Reject, in.session, encode_frame(EapShFrame::failure(0))}};
  };

  AsOutput out;
  Entry* entry = nullptr;
  if (in.type == EnvelopeType::Start) {
    auto& e = sessions_[in.session];
    e = Entry{server_.new_session(), std::nullopt, {}};
    entry = &e;
    out = entry->session->begin();
  } else if (in.type == EnvelopeType::Eap) {
    auto it = sessions_.find(in.session);
    if (it == sessions_.end() || !it->second.session || it->second.session->finished()) {
      return reject();
    }
    entry = &it->second;
    try {
      out = entry->session->step(decode_frame(in.payload));
    } catch (const Error& e) {
      out = {EapShFrame::failure(0), AsDecision{AsDecision::Kind::Failure, std::nullopt, {},
                                                 e.code(), e.what()}};
    }
    if (!entry->session->fallback_reason().empty()) {
      entry->fallback_reason = entry->session->fallback_reason();
    }
  } else {
    return reject();
  }

  std::vector<Envelope> replies;
  if (out.decision) {
    entry->decision = out.decision;
    const auto eap = encode_frame(*out.frame, server_.settings().max_eap_packet);
    if (out.decision->kind == AsDecision::Kind::Success) {
      replies.push_back(make_accept(in.session, *out.decision->msk, eap));
    } else {
      replies.push_back({EnvelopeType::Reject, in.session, eap});
    }
    entry->session.reset();
  } else if (out.frame) {
    replies.push_back(
        {EnvelopeType::Eap, in.session, encode_frame(*out.frame, server_.settings().max_eap_packet)});
  }
  return replies;
}

std::optional<AsDecision> AsDispatcher::decision(std::uint32_t session) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(session);
  if (it == sessions_.end()) return std::nullopt;
  return it->second.decision;
}

std::string AsDispatcher::fallback_reason(std::uint32_t session) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(session);
  return it == sessions_.end() ? std::string() : it->second.fallback_reason;
}

std::size_t AsDispatcher::active_sessions() const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(std::count_if(
      sessions_.begin(), sessions_.end(), [](const auto& kv) { return kv.second.session != nullptr; }));
}

std::size_t AsDispatcher::sweep(SystemTime now) {
  std::lock_guard lock(mu_);
  std::size_t dropped = 0;
  for (auto& [id, e] : sessions_) {
    if (e.session && e.session->expired(now)) {
      e.session.reset();
      e.decision = AsDecision{AsDecision::Kind::Failure, std::nullopt, {}, Errc::Timeout,
                              "session idle past the inactivity timeout"};
      ++dropped;
    }
  }
  return dropped;
}

}  // namespace eapsh
