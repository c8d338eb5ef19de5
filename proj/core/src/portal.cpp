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

#include "eapsh/portal.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <sys/stat.h>

#include <fstream>
#include <sstream>

#include <httplib.h>

#include "eapsh/error.hpp"
#include "eapsh/http.hpp"
#include "eapsh/pseudonym.hpp"

namespace eapsh {

namespace {

constexpr std::size_t kHashSize = 32;

Bytes pbkdf2(std::string_view password, ByteView salt) {
  Bytes out(kHashSize);
  if (PKCS5_PBKDF2_HMAC(password.data(), static_cast<int>(password.size()), salt.data(),
                        static_cast<int>(salt.size()), kPasswordHashIterations, EVP_sha256(),
                        static_cast<int>(out.size()), out.data()) != 1) {
    throw Error(Errc::InvariantViolation, "PBKDF2 failed");
  }
  return out;
}

void check_username(std::string_view name) {
  if (name.empty() || name.size() > kMaxIdentityLength) {
    throw Error(Errc::BadIdentity, "username length");
  }
  for (unsigned char c : name) {
    if (c < 0x20 || c == 0x7f || c == ':') throw Error(Errc::BadIdentity, "username character");
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string content_type_for(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".html") return "text/html; charset=utf-8";
  if (ext == ".js") return "text/javascript; charset=utf-8";
  if (ext == ".css") return "text/css; charset=utf-8";
  if (ext == ".png") return "image/png";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".ico") return "image/x-icon";
  return "application/octet-stream";
}

bool safe_asset_name(std::string_view name) {
  if (name.empty() || name.front() == '.') return false;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '.' || c == '-' || c == '_';
    if (!ok) return false;
  }
  return true;
}

std::string page(std::string_view title, std::string_view body) {
  std::string out = "<!DOCTYPE html>\n<html>\n<head><meta charset=\"utf-8\"><title>";
  out += title;
  out += "</title></head>\n<body>\n";
  out += body;
  out += "\n</body>\n</html>\n";
  return out;
}

}  // namespace

std::string html_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

// ---- user store ----

UserRecord make_user_record(std::string_view username, std::string_view password,
                            RandomSource& rng) {
  check_username(username);
  UserRecord r{std::string(username), Bytes(kPasswordSaltSize), {}};
  rng.fill(r.salt);
  r.hash = pbkdf2(password, r.salt);
  return r;
}

bool verify_password(const UserRecord& record, std::string_view password) {
  const auto h = pbkdf2(password, record.salt);
  return h.size() == record.hash.size() &&
         CRYPTO_memcmp(h.data(), record.hash.data(), h.size()) == 0;
}

UserStore UserStore::parse(std::string_view text) {
  UserStore store;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;

    const auto where = "line " + std::to_string(line_no);
    auto c1 = line.find(':');
    auto c2 = c1 == std::string_view::npos ? c1 : line.find(':', c1 + 1);
    if (c2 == std::string_view::npos || line.find(':', c2 + 1) != std::string_view::npos) {
      throw Error(Errc::StoreCorrupt, where + ": expected username:salt:hash");
    }
    UserRecord r;
    r.username = std::string(line.substr(0, c1));
    try {
      check_username(r.username);
      r.salt = from_hex(line.substr(c1 + 1, c2 - c1 - 1));
      r.hash = from_hex(line.substr(c2 + 1));
    } catch (const Error& e) {
      throw Error(Errc::StoreCorrupt, where + ": " + e.what());
    }
    if (r.salt.size() != kPasswordSaltSize || r.hash.size() != kHashSize) {
      throw Error(Errc::StoreCorrupt, where + ": bad salt or hash length");
    }
    if (store.users_.count(r.username)) {
      throw Error(Errc::StoreCorrupt, where + ": duplicate user " + r.username);
    }
    store.users_.emplace(r.username, std::move(r));
  }
  return store;
}

UserStore UserStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::StoreCorrupt, "cannot read " + path.string());
  return parse(read_file(path));
}

void UserStore::add(std::string_view username, std::string_view password, RandomSource& rng) {
  auto r = make_user_record(username, password, rng);
  users_.insert_or_assign(r.username, std::move(r));
}

bool UserStore::verify(std::string_view username, std::string_view password) const {
  auto it = users_.find(username);
  if (it == users_.end()) {
    // Same work whether or not the user exists.
    UserRecord dummy{"", Bytes(kPasswordSaltSize), Bytes(kHashSize)};
    (void)verify_password(dummy, password);
    return false;
  }
  return verify_password(it->second, password);
}

std::optional<UserRecord> UserStore::find(std::string_view username) const {
  auto it = users_.find(username);
  if (it == users_.end()) return std::nullopt;
  return it->second;
}

std::size_t UserStore::size() const { return users_.size(); }

std::string UserStore::serialize() const {
  std::string out;
  for (const auto& [name, r] : users_) {
    out += name + ":" + to_hex(r.salt) + ":" + to_hex(r.hash) + "\n";
  }
  return out;
}

void UserStore::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << serialize();
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  ::chmod(path.c_str(), 0600);
}

// ---- portal ----

struct CaptivePortal::Server {
  httplib::Server http;
};

CaptivePortal::CaptivePortal(UserStore users, std::filesystem::path assets_dir)
    : users_(std::move(users)), assets_dir_(std::move(assets_dir)) {
  if (!std::filesystem::is_regular_file(assets_dir_ / "index.html")) {
    throw Error(Errc::ConfigError, "no index.html in " + assets_dir_.string());
  }
}

CaptivePortal::~CaptivePortal() { stop(); }

PortalReply CaptivePortal::get(std::string_view path) const {
  auto q = path.find('?');
  if (q != std::string_view::npos) path = path.substr(0, q);
  std::string name = path == "/" ? "index.html" : std::string(path.substr(1));
  if (path.empty() || path.front() != '/' || !safe_asset_name(name)) {
    return {404, "text/html; charset=utf-8", page("Not found", "<p>Not found.</p>"), {}};
  }
  const auto file = assets_dir_ / name;
  if (!std::filesystem::is_regular_file(file)) {
    return {404, "text/html; charset=utf-8", page("Not found", "<p>Not found.</p>"), {}};
  }
  return {200, content_type_for(file), read_file(file), {}};
}

PortalReply CaptivePortal::login(const std::map<std::string, std::string>& form) const {
  auto uname = form.find("uname");
  auto hpsw = form.find("hpsw");
  if (uname == form.end() || hpsw == form.end() || uname->second.empty() ||
      hpsw->second.empty()) {
    return {400, "text/html; charset=utf-8",
            page("Bad request", "<p>Username and password are required.</p>"
                                "<p><a href=\"./\">Back</a></p>"),
            {}};
  }
  if (users_.verify(uname->second, hpsw->second)) {
    return {200, "text/html; charset=utf-8",
            page("Logged in", "<p>Welcome, " + html_escape(uname->second) +
                                  ". Your device is being enrolled; you may close this page.</p>"),
            uname->second};
  }
  return {200, "text/html; charset=utf-8",
          page("Login failed",
               "<p>Wrong username or password.</p><p><a href=\"./\">Try again</a></p>"),
          {}};
}

void CaptivePortal::start(const HostPort& bind) {
  if (server_) throw Error(Errc::InvariantViolation, "portal already running");
  server_ = std::make_unique<Server>();
  auto& http = server_->http;

  auto send = [](httplib::Response& res, const PortalReply& reply) {
    res.status = reply.status;
    if (reply.username) res.set_header(std::string(http::kUsernameHeader), *reply.username);
    res.set_content(reply.body, reply.content_type);
  };
  http.set_pre_routing_handler([this](const httplib::Request&, httplib::Response&) {
    ++requests_;
    return httplib::Server::HandlerResponse::Unhandled;
  });
  http.Get(R"(/.*)", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, get(req.path));
  });
  http.Post("/login", [this, send](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> form;
    for (const auto& [k, v] : req.params) form.emplace(k, v);
    send(res, login(form));
  });

  // SO_REUSEADDR only; httplib would also set SO_REUSEPORT.
  http.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });

  int port = bind.port;
  if (bind.port == 0) {
    port = http.bind_to_any_port(bind.host);
    if (port <= 0) {
      server_.reset();
      throw Error(Errc::PortInUse, bind.to_string());
    }
  } else if (!http.bind_to_port(bind.host, bind.port)) {
    server_.reset();
    throw Error(Errc::PortInUse, bind.to_string());
  }
  endpoint_ = {bind.host, static_cast<std::uint16_t>(port)};
  thread_ = std::thread([this] { server_->http.listen_after_bind(); });
  server_->http.wait_until_ready();
}

void CaptivePortal::stop() {
  if (server_) server_->http.stop();
  if (thread_.joinable()) thread_.join();
  server_.reset();
}

}  // namespace eapsh
