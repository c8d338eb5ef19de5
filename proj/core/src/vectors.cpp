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

#include "eapsh/vectors.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "eapsh/codec.hpp"
#include "eapsh/error.hpp"

namespace eapsh {
namespace {

using Fields = std::map<std::string, std::string>;

Fields parse_fields(std::istringstream& in) {
  Fields out;
  std::string tok;
  while (in >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw Error(Errc::Malformed, "token without '=': " + tok);
    out[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return out;
}

const std::string& need(const Fields& f, const std::string& key) {
  auto it = f.find(key);
  if (it == f.end()) throw Error(Errc::Malformed, "missing " + key);
  return it->second;
}

Bytes parse_data(const std::string& text) {
  if (text == "-") return {};
  if (text.rfind("seq:", 0) == 0) {
    Bytes out(std::stoul(text.substr(4)));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<std::uint8_t>(i);
    return out;
  }
  return from_hex(text);
}

Semantic parse_semantic(const std::string& s) {
  if (s == "unflagged") return Semantic::Unflagged;
  if (s == "http_request") return Semantic::HttpRequest;
  if (s == "csr") return Semantic::Csr;
  if (s == "certificate") return Semantic::Certificate;
  throw Error(Errc::Malformed, "unknown semantic " + s);
}

std::optional<Errc> parse_errc(const std::string& s) {
  for (int i = 0; i <= static_cast<int>(Errc::UsageError); ++i) {
    if (to_string(static_cast<Errc>(i)) == s) return static_cast<Errc>(i);
  }
  return std::nullopt;
}

void check_frame(const Fields& f) {
  EapShFrame frame;
  frame.header.code = static_cast<EapCode>(std::stoi(need(f, "code")));
  frame.header.identifier = static_cast<std::uint8_t>(std::stoi(need(f, "id")));
  frame.flags = EapShFlags::from_byte(static_cast<std::uint8_t>(std::stoi(need(f, "flags"), nullptr, 16)));
  if (need(f, "total") != "-") frame.total_length = static_cast<std::uint32_t>(std::stoul(need(f, "total")));
  frame.payload = parse_data(need(f, "payload"));
  const Bytes packet = from_hex(need(f, "packet"));

  if (frame.is_terminal()) frame.header.eap_type = 0;
  if (encode_frame(frame, 0xffff) != packet) throw Error(Errc::Malformed, "encoding differs");
  if (!(decode_frame(packet) == frame)) throw Error(Errc::Malformed, "decoding differs");
}

void check_fragment(const Fields& f) {
  const std::size_t max = std::stoul(need(f, "max"));
  const Bytes message = parse_data(need(f, "message"));
  const Semantic semantic = parse_semantic(need(f, "semantic"));
  std::vector<Bytes> expected;
  std::istringstream list(need(f, "packets"));
  for (std::string item; std::getline(list, item, ',');) expected.push_back(from_hex(item));

  auto frames = fragment(message, semantic, max);
  if (frames.size() != expected.size()) {
    throw Error(Errc::Malformed, std::to_string(frames.size()) + " fragments, expected " +
                                     std::to_string(expected.size()));
  }
  ReassemblyBuffer buffer;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (encode_frame(frames[i], max) != expected[i]) {
      throw Error(Errc::Malformed, "fragment " + std::to_string(i) + " differs");
    }
    auto r = buffer.feed(decode_frame(expected[i]));
    const bool last = i + 1 == frames.size();
    if (last) {
      auto* done = std::get_if<ReassemblyBuffer::Complete>(&r);
      if (!done || done->message != message || done->semantic != semantic) {
        throw Error(Errc::Malformed, "reassembly differs");
      }
    } else if (!std::holds_alternative<ReassemblyBuffer::NeedMore>(r)) {
      throw Error(Errc::Malformed, "reassembly completed early");
    }
  }
}

void check_negative(const Fields& f) {
  const Bytes packet = from_hex(need(f, "packet"));
  const auto want = parse_errc(need(f, "error"));
  if (!want) throw Error(Errc::Malformed, "unknown error " + need(f, "error"));
  try {
    decode_frame(packet);
  } catch (const Error& e) {
    if (e.code() == *want) return;
    throw Error(Errc::Malformed, "got " + std::string(to_string(e.code())));
  }
  throw Error(Errc::Malformed, "decoded without error");
}

}  // namespace

VectorReport check_vectors(std::string_view text) {
  VectorReport report;
  std::istringstream lines{std::string(text)};
  for (std::string line; std::getline(lines, line);) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream in(line);
    std::string kind, name;
    if (!(in >> kind)) continue;
    in >> name;
    ++report.total;
    try {
      auto fields = parse_fields(in);
      if (kind == "frame") {
        check_frame(fields);
      } else if (kind == "fragment") {
        check_fragment(fields);
      } else if (kind == "!") {
        check_negative(fields);
      } else {
        throw Error(Errc::Malformed, "unknown vector kind " + kind);
      }
      ++report.passed;
    } catch (const std::exception& e) {
      report.failures.push_back(name + ": " + e.what());
    }
  }
  return report;
}

VectorReport check_vector_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return check_vectors(text.str());
}

}  // namespace eapsh
