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

#include "eapsh/http.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <vector>

#include "eapsh/error.hpp"

namespace eapsh::http {

namespace {

struct HeaderLine {
  std::size_t begin;  // start of the line
  std::size_t end;    // past the CRLF
  std::string_view name;
  std::string_view value;
};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::string_view as_view(ByteView b) {
  return {reinterpret_cast<const char*>(b.data()), b.size()};
}

// Header lines between the start line and the blank line.
std::vector<HeaderLine> header_lines(ByteView message, std::size_t end) {
  std::vector<HeaderLine> out;
  auto text = as_view(message).substr(0, end);
  auto pos = text.find("\r\n");
  if (pos == std::string_view::npos) return out;
  pos += 2;
  while (pos < end) {
    auto eol = text.find("\r\n", pos);
    if (eol == std::string_view::npos || eol == pos) break;
    auto line = text.substr(pos, eol - pos);
    auto colon = line.find(':');
    HeaderLine h{pos, eol + 2, {}, {}};
    if (colon != std::string_view::npos) {
      h.name = trim(line.substr(0, colon));
      h.value = trim(line.substr(colon + 1));
    }
    out.push_back(h);
    pos = eol + 2;
  }
  return out;
}

std::optional<std::size_t> parse_length(std::string_view v) {
  std::size_t n = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
  if (ec != std::errc{} || p != v.data() + v.size()) return std::nullopt;
  return n;
}

}  // namespace

std::optional<std::size_t> header_end(ByteView data) {
  auto pos = as_view(data).find("\r\n\r\n");
  if (pos == std::string_view::npos) return std::nullopt;
  return pos + 4;
}

std::optional<std::size_t> complete_request_length(ByteView data) {
  auto end = header_end(data);
  if (!end) {
    if (data.size() > kMaxHeaderBytes) throw Error(Errc::MalformedHttp, "header too large");
    return std::nullopt;
  }
  auto line_end = as_view(data).find("\r\n");
  auto request_line = as_view(data).substr(0, line_end);
  if (std::count(request_line.begin(), request_line.end(), ' ') < 2) {
    throw Error(Errc::MalformedHttp, "bad request line");
  }
  std::size_t body_len = 0;
  for (const auto& h : header_lines(data, *end)) {
    if (iequals(h.name, "Transfer-Encoding")) {
      throw Error(Errc::MalformedHttp, "chunked requests are not supported");
    }
    if (iequals(h.name, "Content-Length")) {
      auto n = parse_length(h.value);
      if (!n) throw Error(Errc::MalformedHttp, "bad Content-Length");
      body_len = *n;
    }
  }
  if (data.size() < *end + body_len) return std::nullopt;
  return *end + body_len;
}

std::optional<int> status_code(ByteView response) {
  auto text = as_view(response);
  if (text.substr(0, 5) != "HTTP/") return std::nullopt;
  auto sp = text.find(' ');
  if (sp == std::string_view::npos || sp + 4 > text.size()) return std::nullopt;
  int code = 0;
  auto digits = text.substr(sp + 1, 3);
  auto [p, ec] = std::from_chars(digits.data(), digits.data() + 3, code);
  if (ec != std::errc{} || p != digits.data() + 3) return std::nullopt;
  return code;
}

namespace {

constexpr std::size_t kMaxChunkBytes = 16 * 1024 * 1024;

// Bytes spanned by a complete chunked body including its trailer section,
// or nullopt if more are needed.
std::optional<std::size_t> chunked_body_length(ByteView body) {
  const auto text = as_view(body);
  std::size_t pos = 0;
  for (;;) {
    const auto eol = text.find("\r\n", pos);
    if (eol == std::string_view::npos) return std::nullopt;
    auto size_field = text.substr(pos, eol - pos);
    size_field = size_field.substr(0, size_field.find(';'));
    std::size_t size = 0;
    auto [ptr, ec] = std::from_chars(size_field.data(), size_field.data() + size_field.size(),
                                     size, 16);
    if (ec != std::errc() || ptr != size_field.data() + size_field.size() ||
        size > kMaxChunkBytes) {
      throw Error(Errc::MalformedResponse, "bad chunk size");
    }
    pos = eol + 2;
    if (size == 0) {
      // Trailer fields, then an empty line.
      for (;;) {
        const auto line_end = text.find("\r\n", pos);
        if (line_end == std::string_view::npos) return std::nullopt;
        const bool blank = line_end == pos;
        pos = line_end + 2;
        if (blank) return pos;
      }
    }
    if (text.size() < pos + size + 2) return std::nullopt;
    if (text.substr(pos + size, 2) != "\r\n") {
      throw Error(Errc::MalformedResponse, "chunk not followed by CRLF");
    }
    pos += size + 2;
  }
}

}  // namespace

std::optional<std::size_t> complete_response_length(ByteView data, bool eof) {
  auto end = header_end(data);
  if (!end) {
    if (eof || data.size() > kMaxHeaderBytes) {
      throw Error(Errc::MalformedResponse, "incomplete response header");
    }
    return std::nullopt;
  }
  auto code = status_code(data);
  if (!code) throw Error(Errc::MalformedResponse, "bad status line");
  if ((*code >= 100 && *code < 200) || *code == 204 || *code == 304) return *end;

  std::optional<std::size_t> length;
  bool chunked = false;
  for (const auto& h : header_lines(data, *end)) {
    if (iequals(h.name, "Transfer-Encoding")) {
      if (!iequals(h.value, "chunked")) {
        throw Error(Errc::MalformedResponse, "unsupported transfer coding");
      }
      chunked = true;
    }
    if (iequals(h.name, "Content-Length")) {
      length = parse_length(h.value);
      if (!length) throw Error(Errc::MalformedResponse, "bad Content-Length");
    }
  }
  if (chunked) {
    auto n = chunked_body_length(data.subspan(*end));
    if (!n) {
      if (eof) throw Error(Errc::MalformedResponse, "connection closed mid-body");
      return std::nullopt;
    }
    return *end + *n;
  }
  if (length) {
    if (data.size() < *end + *length) {
      if (eof) throw Error(Errc::MalformedResponse, "connection closed mid-body");
      return std::nullopt;
    }
    return *end + *length;
  }
  // Neither length nor chunking: the body runs until the peer closes.
  if (!eof) return std::nullopt;
  return data.size();
}

std::optional<std::string> find_header(ByteView message, std::string_view name) {
  auto end = header_end(message);
  if (!end) return std::nullopt;
  for (const auto& h : header_lines(message, *end)) {
    if (iequals(h.name, name)) return std::string(h.value);
  }
  return std::nullopt;
}

StripResult strip_header(ByteView message, std::string_view name) {
  StripResult out;
  auto end = header_end(message);
  if (!end) {
    out.message.assign(message.begin(), message.end());
    return out;
  }
  std::size_t copied = 0;
  for (const auto& h : header_lines(message, *end)) {
    if (!iequals(h.name, name)) continue;
    if (!out.value) out.value = std::string(h.value);
    out.message.insert(out.message.end(), message.begin() + static_cast<std::ptrdiff_t>(copied),
                       message.begin() + static_cast<std::ptrdiff_t>(h.begin));
    copied = h.end;
  }
  out.message.insert(out.message.end(), message.begin() + static_cast<std::ptrdiff_t>(copied),
                     message.end());
  return out;
}

ReplaceResult replace_header_value(ByteView message, std::string_view name,
                                   std::string_view new_value) {
  ReplaceResult out;
  auto end = header_end(message);
  if (end) {
    for (const auto& h : header_lines(message, *end)) {
      if (!iequals(h.name, name)) continue;
      out.old_value = std::string(h.value);
      auto text = as_view(message);
      const std::size_t value_begin =
          static_cast<std::size_t>(h.value.data() - text.data());
      const std::size_t value_end = value_begin + h.value.size();
      out.message.assign(message.begin(), message.begin() + static_cast<std::ptrdiff_t>(value_begin));
      out.message.insert(out.message.end(), new_value.begin(), new_value.end());
      out.message.insert(out.message.end(), message.begin() + static_cast<std::ptrdiff_t>(value_end),
                         message.end());
      return out;
    }
  }
  out.message.assign(message.begin(), message.end());
  return out;
}

Bytes body(ByteView message) {
  auto end = header_end(message);
  if (!end) return {};
  return Bytes(message.begin() + static_cast<std::ptrdiff_t>(*end), message.end());
}

Bytes synthesize_bad_gateway(std::string_view detail) {
  std::string html =
      "<!DOCTYPE html>\n<html><head><title>Portal unavailable</title></head><body>"
      "<h1>Captive portal unreachable</h1><p>";
  for (char c : detail) {
    switch (c) {
      case '<': html += "&lt;"; break;
      case '>': html += "&gt;"; break;
      case '&': html += "&amp;"; break;
      default: html += c;
    }
  }
  html += "</p><p><a href=\"/\">Try again</a></p></body></html>\n";
  std::string head =
      "HTTP/1.1 502 Bad Gateway\r\nContent-Type: text/html; charset=utf-8\r\n"
      "Content-Length: " +
      std::to_string(html.size()) + "\r\nConnection: close\r\n\r\n";
  return to_bytes(head + html);
}

}  // namespace eapsh::http
