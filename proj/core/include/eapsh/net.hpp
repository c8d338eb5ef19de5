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
#include <optional>
#include <string>

#include "eapsh/bytes.hpp"
#include "eapsh/config.hpp"
#include "eapsh/random.hpp"

// Blocking TCP helpers over POSIX sockets, with poll()-based timeouts.
namespace eapsh::net {

using Millis = std::chrono::milliseconds;

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& other) noexcept : fd_(other.release()) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close(); }

  bool valid() const { return fd_ >= 0; }
  int fd() const { return fd_; }
  int release();
  void close();

  void send_all(ByteView data);
  // Reads what is available, waiting up to `timeout`. Empty result means the
  // peer closed. Throws Error(Timeout) or Error(IoError).
  Bytes recv_some(Millis timeout, std::size_t max = 16 * 1024);
  void shutdown_write();

  // Dotted address of the remote end, or "" if unknown.
  std::string peer_address() const;
  std::string local_address() const;

 private:
  int fd_ = -1;
};

class Listener {
 public:
  // Port 0 picks an ephemeral port. Throws Error(PortInUse) or Error(IoError).
  static Listener bind(const std::string& host, std::uint16_t port, int backlog = 16);

  // nullopt on timeout.
  std::optional<Socket> accept(Millis timeout);

  const std::string& host() const { return host_; }
  std::uint16_t port() const { return port_; }
  HostPort endpoint() const { return {host_, port_}; }
  bool valid() const { return socket_.valid(); }
  int fd() const { return socket_.fd(); }
  void close() { socket_.close(); }

 private:
  Socket socket_;
  std::string host_;
  std::uint16_t port_ = 0;
};

// Throws Error(IoError) when the peer cannot be reached.
Socket connect(const HostPort& to, Millis timeout = Millis(5000));

// Reads one complete HTTP request. Throws Error(MalformedHttp),
// Error(Timeout) or Error(IoError).
Bytes read_http_request(Socket& socket, Millis timeout);
// Reads one complete HTTP response (Content-Length, chunked or close framed).
// Throws Error(MalformedResponse), Error(Timeout) or Error(IoError).
Bytes read_http_response(Socket& socket, Millis timeout);

// 4-byte big-endian length prefix, then the message.
void send_framed(Socket& socket, ByteView message);
// nullopt when the peer closed cleanly before a new message.
std::optional<Bytes> recv_framed(Socket& socket, Millis timeout);

inline constexpr std::uint16_t kLocalPortMin = 1025;
inline constexpr std::uint16_t kLocalPortMax = 65535;
inline constexpr int kLocalEndpointAttempts = 64;

// The supplicant's browser-facing endpoint: a random 127.X.X.X address and a
// random port in [1025, 65535].
class LocalEndpoint {
 public:
  // Throws Error(NoPortAvailable) after 64 failed binds.
  static LocalEndpoint open(RandomSource& rng);

  const std::string& address() const { return listener_.host(); }
  std::uint16_t port() const { return listener_.port(); }
  std::string url() const;
  Listener& listener() { return listener_; }
  int listener_fd() const { return listener_.fd(); }
  void close() { listener_.close(); }
  bool is_open() const { return listener_.valid(); }

 private:
  Listener listener_;
};

bool is_loopback(const std::string& dotted);

}  // namespace eapsh::net
