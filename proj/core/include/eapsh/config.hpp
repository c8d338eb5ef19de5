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

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace eapsh {

// Flat key=value configuration in the wpa_supplicant / FreeRADIUS style.
// Blank lines, '#' comments, and block delimiters ("network={", "}") are
// skipped; surrounding double quotes on values are removed.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  // Throws Error(ConfigError) when the key is missing.
  std::string require(const std::string& key) const;
  std::string get_or(const std::string& key, std::string fallback) const;
  long long get_int(const std::string& key, long long fallback) const;

  void set(std::string key, std::string value) {
    values_[std::move(key)] = std::move(value);
  }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string serialize() const;

 private:
  std::map<std::string, std::string> values_;
};

struct HostPort {
  std::string host;
  std::uint16_t port = 0;

  std::string to_string() const { return host + ":" + std::to_string(port); }
};

// "127.0.0.1:8080" -> {host, port}. Throws Error(ConfigError).
HostPort parse_host_port(std::string_view text);

}  // namespace eapsh
