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

#include "eapsh/transcript.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "eapsh/codec.hpp"
#include "eapsh/error.hpp"

namespace eapsh {

std::string flag_letters(std::uint8_t b) {
  std::string out;
  if (b & EapShFlags::kLength) out += 'L';
  if (b & EapShFlags::kMore) out += 'M';
  if (b & EapShFlags::kStart) out += 'S';
  if (b & EapShFlags::kHttp) out += 'H';
  if (b & EapShFlags::kCert) out += 'C';
  return out;
}

TranscriptEvent describe_packet(ByteView packet, std::string actor, std::string direction) {
  TranscriptEvent e;
  e.actor = std::move(actor);
  e.direction = std::move(direction);
  e.size = packet.size();
  try {
    const auto f = decode_frame(packet);
    switch (f.header.code) {
      case EapCode::Request: e.kind = "request"; break;
      case EapCode::Response: e.kind = "response"; break;
      case EapCode::Success: e.kind = "success"; break;
      case EapCode::Failure: e.kind = "failure"; break;
    }
    if (!f.is_terminal()) e.flags = flag_letters(f.flags.to_byte());
  } catch (const Error&) {
    e.kind = "malformed";
  }
  return e;
}

Transcript::Transcript() : start_(std::chrono::steady_clock::now()) {}

Transcript::Transcript(const Transcript& other) {
  std::lock_guard lock(other.mu_);
  start_ = other.start_;
  events_ = other.events_;
}

Transcript& Transcript::operator=(const Transcript& other) {
  if (this == &other) return *this;
  std::scoped_lock lock(mu_, other.mu_);
  start_ = other.start_;
  events_ = other.events_;
  return *this;
}

void Transcript::add(TranscriptEvent event) {
  std::lock_guard lock(mu_);
  events_.push_back(std::move(event));
}

void Transcript::note(TranscriptEvent e) {
  std::lock_guard lock(mu_);
  e.t = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                              start_)
            .count();
  events_.push_back(std::move(e));
}

void Transcript::record(ByteView packet, const std::string& actor, const std::string& direction) {
  auto e = describe_packet(packet, actor, direction);
  std::lock_guard lock(mu_);
  e.t = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                              start_)
            .count();
  events_.push_back(std::move(e));
}

std::vector<TranscriptEvent> Transcript::events() const {
  std::lock_guard lock(mu_);
  return events_;
}

std::size_t Transcript::size() const {
  std::lock_guard lock(mu_);
  return events_.size();
}

std::string Transcript::to_jsonl() const {
  std::string out;
  for (const auto& e : events()) {
    nlohmann::ordered_json j;
    j["t"] = e.t;
    j["actor"] = e.actor;
    j["direction"] = e.direction;
    j["kind"] = e.kind;
    j["flags"] = e.flags;
    j["size"] = e.size;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void Transcript::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << to_jsonl();
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
}

std::vector<TranscriptEvent> Transcript::parse_jsonl(std::string_view text) {
  std::vector<TranscriptEvent> events;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      events.push_back({j.at("t").get<std::int64_t>(), j.at("actor").get<std::string>(),
                        j.at("direction").get<std::string>(), j.at("kind").get<std::string>(),
                        j.at("flags").get<std::string>(), j.at("size").get<std::size_t>()});
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::Malformed, e.what());
    }
  }
  return events;
}

std::size_t Transcript::count_flag(char letter) const {
  auto ev = events();
  return static_cast<std::size_t>(std::count_if(ev.begin(), ev.end(), [&](const auto& e) {
    return e.flags.find(letter) != std::string::npos;
  }));
}

std::size_t Transcript::count_kind(std::string_view kind) const {
  auto ev = events();
  return static_cast<std::size_t>(
      std::count_if(ev.begin(), ev.end(), [&](const auto& e) { return e.kind == kind; }));
}

}  // namespace eapsh
