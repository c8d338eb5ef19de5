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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "eapsh/bytes.hpp"

namespace eapsh {

// One line of a JSON-lines transcript; fields are written in this order.
struct TranscriptEvent {
  std::int64_t t = 0;     // milliseconds since the run started
  std::string actor;      // who sent it: supplicant, authenticator, as
  std::string direction;  // to_as, to_supplicant
  std::string kind;       // request, response, success, failure, msk
  std::string flags;      // subset of "LMSHC"
  std::size_t size = 0;   // bytes on the wire

  bool operator==(const TranscriptEvent&) const = default;
};

// Describes an encoded EAP packet. Undecodable packets get kind "malformed".
TranscriptEvent describe_packet(ByteView packet, std::string actor, std::string direction);

std::string flag_letters(std::uint8_t flag_byte);

class Transcript {
 public:
  Transcript();

  void add(TranscriptEvent event);
  // Adds a non-frame event, stamping t.
  void note(TranscriptEvent event);
  // Stamps t from the run's start.
  void record(ByteView packet, const std::string& actor, const std::string& direction);
  std::vector<TranscriptEvent> events() const;
  std::size_t size() const;

  std::string to_jsonl() const;
  // Throws Error(IoError).
  void write(const std::filesystem::path& path) const;
  // Throws Error(Malformed).
  static std::vector<TranscriptEvent> parse_jsonl(std::string_view text);

  // Frames whose flags include the letter.
  std::size_t count_flag(char letter) const;
  std::size_t count_kind(std::string_view kind) const;

  Transcript(const Transcript& other);
  Transcript& operator=(const Transcript& other);

 private:
  mutable std::mutex mu_;
  std::chrono::steady_clock::time_point start_;
  std::vector<TranscriptEvent> events_;
};

}  // namespace eapsh
