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

#include "eapsh/codec.hpp"

#include <algorithm>
#include <string>

#include "eapsh/error.hpp"

namespace eapsh {

std::uint8_t EapShFlags::to_byte() const {
  std::uint8_t b = reserved & kReservedMask;
  if (length_included) b |= kLength;
  if (more_fragments) b |= kMore;
  if (start) b |= kStart;
  if (http_request) b |= kHttp;
  if (cert) b |= kCert;
  return b;
}

EapShFlags EapShFlags::from_byte(std::uint8_t b) {
  EapShFlags f;
  f.length_included = (b & kLength) != 0;
  f.more_fragments = (b & kMore) != 0;
  f.start = (b & kStart) != 0;
  f.http_request = (b & kHttp) != 0;
  f.cert = (b & kCert) != 0;
  f.reserved = b & kReservedMask;
  return f;
}

bool EapShFrame::is_ack() const {
  return !is_terminal() && flags.all_clear() && payload.empty() && !total_length;
}

bool EapShFrame::is_start() const {
  return header.code == EapCode::Request && flags.start;
}

EapShFrame EapShFrame::ack(EapCode code, std::uint8_t identifier) {
  EapShFrame f;
  f.header.code = code;
  f.header.identifier = identifier;
  return f;
}

EapShFrame EapShFrame::start_request(std::uint8_t identifier) {
  EapShFrame f = ack(EapCode::Request, identifier);
  f.flags.start = true;
  return f;
}

EapShFrame EapShFrame::success(std::uint8_t identifier) {
  EapShFrame f;
  f.header.code = EapCode::Success;
  f.header.identifier = identifier;
  f.header.eap_type = 0;
  return f;
}

EapShFrame EapShFrame::failure(std::uint8_t identifier) {
  EapShFrame f = success(identifier);
  f.header.code = EapCode::Failure;
  return f;
}

const char* to_string(Semantic s) {
  switch (s) {
    case Semantic::Unflagged: return "HttpResponse";
    case Semantic::HttpRequest: return "HttpRequest";
    case Semantic::Csr: return "Csr";
    case Semantic::Certificate: return "Certificate";
  }
  return "?";
}

namespace {

void check_flags(const EapShFrame& f) {
  const auto& fl = f.flags;
  if (fl.reserved != 0) throw Error(Errc::ReservedBitsSet);
  int semantic = int{fl.start} + int{fl.http_request} + int{fl.cert};
  if (semantic > 1) {
    throw Error(Errc::InvariantViolation, "more than one of S/H/C set");
  }
  if (fl.start && (fl.length_included || fl.more_fragments || !f.payload.empty())) {
    throw Error(Errc::InvariantViolation, "S frame must be bare");
  }
  if (fl.length_included != f.total_length.has_value()) {
    throw Error(Errc::InvariantViolation, "L bit and total_length disagree");
  }
  if (f.total_length && *f.total_length < f.payload.size()) {
    throw Error(Errc::InvariantViolation, "total_length below fragment size");
  }
}

void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(Bytes& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) {
    out.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

}  // namespace

Bytes encode_frame(const EapShFrame& frame, std::size_t max_eap_packet) {
  const auto code = frame.header.code;
  Bytes out;
  out.push_back(static_cast<std::uint8_t>(code));
  out.push_back(frame.header.identifier);
  put_u16(out, 0);

  if (code == EapCode::Success || code == EapCode::Failure) {
    if (!frame.payload.empty() || !frame.flags.all_clear() || frame.total_length) {
      throw Error(Errc::InvariantViolation, "Success/Failure carry no payload");
    }
    out[3] = 4;
    return out;
  }
  if (code != EapCode::Request && code != EapCode::Response) {
    throw Error(Errc::InvariantViolation, "unknown EAP code");
  }
  if (frame.header.eap_type != kEapShType) {
    throw Error(Errc::BadType, "eap_type must be 56");
  }
  check_flags(frame);

  const std::size_t size = kEapHeaderSize + kFlagsSize +
                           (frame.total_length ? kTotalLengthSize : 0) +
                           frame.payload.size();
  if (size > max_eap_packet || size > 0xffff) {
    throw Error(Errc::Oversize, std::to_string(size) + " bytes");
  }
  out.reserve(size);
  out.push_back(kEapShType);
  out.push_back(frame.flags.to_byte());
  if (frame.total_length) put_u32(out, *frame.total_length);
  append(out, frame.payload);
  out[2] = static_cast<std::uint8_t>(size >> 8);
  out[3] = static_cast<std::uint8_t>(size);
  return out;
}

EapShFrame decode_frame(ByteView bytes) {
  if (bytes.size() < 4) throw Error(Errc::Truncated, "shorter than EAP header");
  const std::size_t declared = (std::size_t{bytes[2]} << 8) | bytes[3];
  if (declared > bytes.size()) {
    throw Error(Errc::Truncated, "declared " + std::to_string(declared) + " bytes, have " +
                                     std::to_string(bytes.size()));
  }
  if (declared < 4) throw Error(Errc::Truncated, "declared length below header size");

  EapShFrame f;
  f.header.identifier = bytes[1];
  f.header.length = static_cast<std::uint16_t>(declared);
  switch (bytes[0]) {
    case 1: f.header.code = EapCode::Request; break;
    case 2: f.header.code = EapCode::Response; break;
    case 3: f.header.code = EapCode::Success; break;
    case 4: f.header.code = EapCode::Failure; break;
    default: throw Error(Errc::InvariantViolation, "unknown EAP code");
  }
  if (f.is_terminal()) {
    if (declared != 4) {
      throw Error(Errc::InvariantViolation, "Success/Failure carry no payload");
    }
    f.header.eap_type = 0;
    return f;
  }

  if (declared < kEapHeaderSize) throw Error(Errc::Truncated, "missing type byte");
  f.header.eap_type = bytes[4];
  if (f.header.eap_type != kEapShType) {
    throw Error(Errc::BadType, "type " + std::to_string(f.header.eap_type));
  }
  if (declared < kEapHeaderSize + kFlagsSize) throw Error(Errc::Truncated, "missing flags");
  f.flags = EapShFlags::from_byte(bytes[5]);
  if (f.flags.reserved != 0) throw Error(Errc::ReservedBitsSet);

  std::size_t offset = kEapHeaderSize + kFlagsSize;
  if (f.flags.length_included) {
    if (declared < offset + kTotalLengthSize) {
      throw Error(Errc::Truncated, "missing message length field");
    }
    f.total_length = (std::uint32_t{bytes[offset]} << 24) |
                     (std::uint32_t{bytes[offset + 1]} << 16) |
                     (std::uint32_t{bytes[offset + 2]} << 8) | bytes[offset + 3];
    offset += kTotalLengthSize;
  }
  f.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                   bytes.begin() + static_cast<std::ptrdiff_t>(declared));
  check_flags(f);
  return f;
}

EapCode default_code(Semantic semantic) {
  switch (semantic) {
    case Semantic::HttpRequest:
    case Semantic::Csr:
      return EapCode::Response;
    case Semantic::Certificate:
    case Semantic::Unflagged:
      return EapCode::Request;
  }
  return EapCode::Request;
}

std::vector<EapShFrame> fragment(ByteView message, Semantic semantic,
                                 std::size_t max_eap_packet) {
  return fragment(message, semantic, default_code(semantic), max_eap_packet);
}

std::vector<EapShFrame> fragment(ByteView message, Semantic semantic, EapCode code,
                                 std::size_t max_eap_packet) {
  if (max_eap_packet < kMinMaxEapPacket) {
    throw Error(Errc::InvariantViolation, "max_eap_packet below 64");
  }
  if (code != EapCode::Request && code != EapCode::Response) {
    throw Error(Errc::InvariantViolation, "fragments must be Request or Response");
  }
  if (message.size() > 0xffffffffu) throw Error(Errc::Oversize, "message over 4 GiB");

  EapShFlags base;
  base.http_request = semantic == Semantic::HttpRequest;
  base.cert = semantic == Semantic::Csr || semantic == Semantic::Certificate;

  auto make = [&](ByteView chunk) {
    EapShFrame f;
    f.header.code = code;
    f.flags = base;
    f.payload.assign(chunk.begin(), chunk.end());
    return f;
  };

  std::vector<EapShFrame> frames;
  const std::size_t whole = fragment_capacity(max_eap_packet);
  if (message.size() <= whole) {
    frames.push_back(make(message));
    return frames;
  }

  const std::size_t first = first_fragment_capacity(max_eap_packet);
  auto head = make(message.first(first));
  head.flags.length_included = true;
  head.flags.more_fragments = true;
  head.total_length = static_cast<std::uint32_t>(message.size());
  frames.push_back(std::move(head));

  std::size_t offset = first;
  while (offset < message.size()) {
    const std::size_t n = std::min(whole, message.size() - offset);
    auto f = make(message.subspan(offset, n));
    offset += n;
    f.flags.more_fragments = offset < message.size();
    frames.push_back(std::move(f));
  }
  return frames;
}

void ReassemblyBuffer::reset() {
  started_ = false;
  expected_total_.reset();
  accumulated_.clear();
  first_flags_ = {};
}

ReassemblyBuffer::Result ReassemblyBuffer::feed(const EapShFrame& frame) {
  if (frame.is_terminal() || frame.flags.start) {
    reset();
    throw Error(Errc::InvariantViolation, "control frame is not a message fragment");
  }
  if (frame.flags.reserved != 0) {
    reset();
    throw Error(Errc::ReservedBitsSet);
  }

  if (!started_) {
    started_ = true;
    first_flags_ = frame.flags;
    if (frame.flags.length_included) expected_total_ = frame.total_length;
  } else {
    if (!frame.flags.same_semantic(first_flags_)) {
      reset();
      throw Error(Errc::FlagMismatch, "semantic flags changed mid-message");
    }
    if (frame.flags.length_included) {
      reset();
      throw Error(Errc::InvariantViolation, "L bit on a continuation fragment");
    }
  }

  if (expected_total_ && accumulated_.size() + frame.payload.size() > *expected_total_) {
    reset();
    throw Error(Errc::Overflow, "fragments exceed declared total length");
  }
  append(accumulated_, frame.payload);

  if (frame.flags.more_fragments) {
    const auto ack_code = frame.header.code == EapCode::Request ? EapCode::Response
                                                                 : EapCode::Request;
    return NeedMore{EapShFrame::ack(ack_code, frame.header.identifier)};
  }

  if (expected_total_ && accumulated_.size() != *expected_total_) {
    reset();
    throw Error(Errc::LengthMismatch, "reassembled size differs from declared total");
  }

  Semantic semantic = Semantic::Unflagged;
  if (first_flags_.http_request) {
    semantic = Semantic::HttpRequest;
  } else if (first_flags_.cert) {
    semantic = frame.header.code == EapCode::Response ? Semantic::Csr
                                                       : Semantic::Certificate;
  }
  Complete done{std::move(accumulated_), semantic};
  reset();
  return done;
}

}  // namespace eapsh
