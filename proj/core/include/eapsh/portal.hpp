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

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>

#include "eapsh/bytes.hpp"
#include "eapsh/config.hpp"
#include "eapsh/random.hpp"

namespace eapsh {

inline constexpr int kPasswordHashIterations = 100000;
inline constexpr std::size_t kPasswordSaltSize = 16;

// One line of the user store: "username:salt_hex:hash_hex", where hash is
// PBKDF2-HMAC-SHA256(password, salt).
struct UserRecord {
  std::string username;
  Bytes salt;
  Bytes hash;
};

// Throws Error(BadIdentity) for names that are empty, too long, or contain
// ':' or control characters.
UserRecord make_user_record(std::string_view username, std::string_view password,
                            RandomSource& rng = system_random());
bool verify_password(const UserRecord& record, std::string_view password);

class UserStore {
 public:
  // Throws Error(StoreCorrupt).
  static UserStore parse(std::string_view text);
  static UserStore load(const std::filesystem::path& path);

  // Adds or replaces a user.
  void add(std::string_view username, std::string_view password,
           RandomSource& rng = system_random());
  bool verify(std::string_view username, std::string_view password) const;
  std::optional<UserRecord> find(std::string_view username) const;
  std::size_t size() const;

  std::string serialize() const;
  // Throws Error(IoError).
  void save(const std::filesystem::path& path) const;

 private:
  std::map<std::string, UserRecord, std::less<>> users_;
};

struct PortalConfig {
  HostPort bind_endpoint{"127.0.0.1", 8080};
  std::filesystem::path assets_dir;
  std::filesystem::path user_store;
};

struct PortalReply {
  int status = 200;
  std::string content_type = "text/html; charset=utf-8";
  std::string body;
  std::optional<std::string> username;  // sent as X-username when set
};

// Minimal login service. Successful logins carry the X-username header;
// everything else is plain pages.
class CaptivePortal {
 public:
  // Throws Error(ConfigError) when assets_dir has no index.html.
  CaptivePortal(UserStore users, std::filesystem::path assets_dir);
  ~CaptivePortal();
  CaptivePortal(const CaptivePortal&) = delete;
  CaptivePortal& operator=(const CaptivePortal&) = delete;

  // Port 0 picks a free port. Throws Error(PortInUse).
  void start(const HostPort& bind);
  void stop();
  bool running() const { return thread_.joinable(); }
  HostPort endpoint() const { return endpoint_; }
  std::size_t request_count() const { return requests_.load(); }
  void reset_request_count() { requests_ = 0; }

  // Request handling without a socket.
  PortalReply get(std::string_view path) const;
  PortalReply login(const std::map<std::string, std::string>& form) const;

 private:
  struct Server;

  UserStore users_;
  std::filesystem::path assets_dir_;
  std::unique_ptr<Server> server_;
  std::thread thread_;
  HostPort endpoint_;
  std::atomic<std::size_t> requests_{0};
};

std::string html_escape(std::string_view text);

}  // namespace eapsh
