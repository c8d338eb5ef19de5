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

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "eapsh/bytes.hpp"

// Minimal HTTP/1.1 message framing for the relay paths. Only what the
// supplicant and AS need: find message boundaries, look at headers, and
// rewrite one header without touching any other byte.
namespace eapsh::http {

inline constexpr std::string_view kUsernameHeader = "X-username";
inline constexpr std::size_t kMaxHeaderBytes = 64 * 1024;

// Length of the first complete request in `data`, or nullopt if more bytes
// are needed. Requests are CRLFCRLF-terminated headers plus a Content-Length
// body. Throws Error(MalformedHttp) on chunked or unparsable requests.
std::optional<std::size_t> complete_request_length(ByteView data);

// Length of a complete response, or nullopt if more bytes are needed.
// `eof` says the peer closed, which completes a close-delimited body.
// Throws Error(MalformedResponse) when the framing cannot be determined.
std::optional<std::size_t> complete_response_length(ByteView data, bool eof);

// Offset just past the blank line ending the header section, if present.
std::optional<std::size_t> header_end(ByteView data);

// First value of a header (case-insensitive name), searching the header
// section only. Surrounding whitespace is trimmed.
std::optional<std::string> find_header(ByteView message, std::string_view name);

struct StripResult {
  Bytes message;
  std::optional<std::string> value;  // first removed value
};

// Removes every line of the named header from the header section.
StripResult strip_header(ByteView message, std::string_view name);

struct ReplaceResult {
  Bytes message;
  std::optional<std::string> old_value;
};

// Replaces the value of the first occurrence of the header; every other byte
// is left as it was.
ReplaceResult replace_header_value(ByteView message, std::string_view name,
                                   std::string_view new_value);

// Status code from the response status line, or nullopt.
std::optional<int> status_code(ByteView response);

// The body of a message (everything after the header section).
Bytes body(ByteView message);

// "HTTP/1.1 502 Bad Gateway" with a small HTML body linking back to "/".
Bytes synthesize_bad_gateway(std::string_view detail);

}  // namespace eapsh::http
