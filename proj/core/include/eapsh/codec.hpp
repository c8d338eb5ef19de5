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

// EAP-SH packet layout (all multi-byte fields big-endian):
//
//   0                   1                   2                   3
//   0 1 2 3 4 5 6 7 8 9 0 1 2 3 4 5 6 7 8 9 0 1 2 3 4 5 6 7 8 9 0 1
//  +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
//  |     Code      |  Identifier   |            Length             |
//  +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
//  |   Type (56)   |L M S H C 0 0 0|  Message Length (iff L=1) ...
//  +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
//  |  ...          |  Payload ...
//  +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
//
// Success and Failure are bare 4-byte EAP headers.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "eapsh/bytes.hpp"

namespace eapsh {

inline constexpr std::uint8_t kEapShType = 56;
inline constexpr std::size_t kDefaultMaxEapPacket = 1020;
inline constexpr std::size_t kMinMaxEapPacket = 64;
inline constexpr std::size_t kEapHeaderSize = 5;  // code, id, length, type
inline constexpr std::size_t kFlagsSize = 1;
inline constexpr std::size_t kTotalLengthSize = 4;

enum class EapCode : std::uint8_t {
  Request = 1,
  Response = 2,
  Success = 3,
  Failure = 4,
};

struct EapHeader {
  EapCode code = EapCode::Request;
  std::uint8_t identifier = 0;
  // Recomputed by encode_frame; filled in by decode_frame.
  std::uint16_t length = 0;
  std::uint8_t eap_type = kEapShType;

  // length is derived from the encoding and does not take part.
  bool operator==(const EapHeader& o) const {
    return code == o.code && identifier == o.identifier && eap_type == o.eap_type;
  }
};

struct EapShFlags {
  static constexpr std::uint8_t kLength = 0x80;
  static constexpr std::uint8_t kMore = 0x40;
  static constexpr std::uint8_t kStart = 0x20;
  static constexpr std::uint8_t kHttp = 0x10;
  static constexpr std::uint8_t kCert = 0x08;
  static constexpr std::uint8_t kReservedMask = 0x07;

  bool length_included = false;  // L
  bool more_fragments = false;   // M
  bool start = false;            // S
  bool http_request = false;     // H
  bool cert = false;             // C
  std::uint8_t reserved = 0;

  std::uint8_t to_byte() const;
  static EapShFlags from_byte(std::uint8_t b);

  bool all_clear() const { return to_byte() == 0; }
  // True when the semantic bits (S/H/C) match.
  bool same_semantic(const EapShFlags& other) const {
    return start == other.start && http_request == other.http_request &&
           cert == other.cert;
  }
  bool operator==(const EapShFlags&) const = default;
};

struct EapShFrame {
  EapHeader header;
  EapShFlags flags;
  std::optional<std::uint32_t> total_length;
  Bytes payload;

  // An acknowledgment: Request/Response, every flag bit zero, no payload.
  bool is_ack() const;
  bool is_start() const;
  bool is_terminal() const {
    return header.code == EapCode::Success || header.code == EapCode::Failure;
  }
  bool operator==(const EapShFrame&) const = default;

  static EapShFrame ack(EapCode code, std::uint8_t identifier);
  static EapShFrame start_request(std::uint8_t identifier);
  static EapShFrame success(std::uint8_t identifier);
  static EapShFrame failure(std::uint8_t identifier);
};

// Which EAP-SH message a run of fragments belongs to. HTTP responses and
// phase-1 tunnel records carry no semantic flag, so they share a value.
enum class Semantic : std::uint8_t {
  Unflagged = 0,
  HttpResponse = Unflagged,
  Handshake = Unflagged,
  HttpRequest,
  Csr,
  Certificate,
};

const char* to_string(Semantic s);

// Throws InvariantViolation or Oversize.
Bytes encode_frame(const EapShFrame& frame,
                   std::size_t max_eap_packet = kDefaultMaxEapPacket);
// Throws Truncated, BadType, ReservedBitsSet, InvariantViolation.
EapShFrame decode_frame(ByteView bytes);

// Payload capacity of the first fragment of a multi-fragment message and of
// any other fragment.
constexpr std::size_t first_fragment_capacity(std::size_t max_eap_packet) {
  return max_eap_packet - kEapHeaderSize - kFlagsSize - kTotalLengthSize;
}
constexpr std::size_t fragment_capacity(std::size_t max_eap_packet) {
  return max_eap_packet - kEapHeaderSize - kFlagsSize;
}

// Default direction for a semantic: what the supplicant sends is a Response,
// what the AS sends is a Request.
EapCode default_code(Semantic semantic);

// Splits one message into frames with identifier 0; callers stamp identifiers
// as they send. Throws InvariantViolation if max_eap_packet < 64.
std::vector<EapShFrame> fragment(ByteView message, Semantic semantic,
                                 std::size_t max_eap_packet = kDefaultMaxEapPacket);
std::vector<EapShFrame> fragment(ByteView message, Semantic semantic, EapCode code,
                                 std::size_t max_eap_packet = kDefaultMaxEapPacket);

class ReassemblyBuffer {
 public:
  struct NeedMore {
    EapShFrame ack;
  };
  struct Complete {
    Bytes message;
    Semantic semantic;
  };
  using Result = std::variant<NeedMore, Complete>;

  // Throws LengthMismatch, FlagMismatch, Overflow, InvariantViolation.
  // After a Complete or an exception the buffer is empty again.
  Result feed(const EapShFrame& frame);

  bool in_progress() const { return started_; }
  std::optional<std::uint32_t> expected_total() const { return expected_total_; }
  std::size_t accumulated() const { return accumulated_.size(); }
  void reset();

 private:
  bool started_ = false;
  std::optional<std::uint32_t> expected_total_;
  Bytes accumulated_;
  EapShFlags first_flags_;
};

inline ReassemblyBuffer::Result reassemble(ReassemblyBuffer& buffer,
                                           const EapShFrame& frame) {
  return buffer.feed(frame);
}

}  // namespace eapsh
