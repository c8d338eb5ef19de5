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

#include "eapsh/net.hpp"

#include <arpa/inet.h>
#include <errno.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>

#include "eapsh/error.hpp"
#include "eapsh/http.hpp"

namespace eapsh::net {

namespace {

std::string errno_text(const char* what) {
  return std::string(what) + ": " + std::strerror(errno);
}

sockaddr_in make_addr(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  const std::string h = host == "localhost" ? "127.0.0.1" : host;
  if (inet_pton(AF_INET, h.c_str(), &addr.sin_addr) != 1) {
    throw Error(Errc::ConfigError, "not an IPv4 address: " + host);
  }
  return addr;
}

std::string dotted(const sockaddr_in& addr) {
  char buf[INET_ADDRSTRLEN] = {};
  inet_ntop(AF_INET, &addr.sin_addr, buf, sizeof(buf));
  return buf;
}

// true if readable before the deadline.
bool wait_readable(int fd, Millis timeout) {
  pollfd p{fd, POLLIN, 0};
  for (;;) {
    int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (rc > 0) return true;
    if (rc == 0) return false;
    if (errno != EINTR) throw Error(Errc::IoError, errno_text("poll"));
  }
}

}  // namespace

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.release();
  }
  return *this;
}

int Socket::release() {
  int fd = fd_;
  fd_ = -1;
  return fd;
}

void Socket::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void Socket::send_all(ByteView data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(Errc::IoError, errno_text("send"));
    }
    sent += static_cast<std::size_t>(n);
  }
}

Bytes Socket::recv_some(Millis timeout, std::size_t max) {
  if (!wait_readable(fd_, timeout)) throw Error(Errc::Timeout, "recv");
  Bytes buf(max);
  for (;;) {
    ssize_t n = ::recv(fd_, buf.data(), buf.size(), 0);
    if (n >= 0) {
      buf.resize(static_cast<std::size_t>(n));
      return buf;
    }
    if (errno == EINTR) continue;
    if (errno == ECONNRESET) return {};
    throw Error(Errc::IoError, errno_text("recv"));
  }
}

void Socket::shutdown_write() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_WR);
}

std::string Socket::peer_address() const {
  sockaddr_in addr{};
  socklen_t len = sizeof(addr);
  if (::getpeername(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0) return {};
  return dotted(addr);
}

std::string Socket::local_address() const {
  sockaddr_in addr{};
  socklen_t len = sizeof(addr);
  if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0) return {};
  return dotted(addr);
}

Listener Listener::bind(const std::string& host, std::uint16_t port, int backlog) {
  auto addr = make_addr(host, port);
  Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!s.valid()) throw Error(Errc::IoError, errno_text("socket"));
  if (::bind(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    if (errno == EADDRINUSE) {
      throw Error(Errc::PortInUse, host + ":" + std::to_string(port));
    }
    throw Error(Errc::IoError, errno_text("bind"));
  }
  if (::listen(s.fd(), backlog) != 0) throw Error(Errc::IoError, errno_text("listen"));
  socklen_t len = sizeof(addr);
  ::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
  Listener l;
  l.socket_ = std::move(s);
  l.host_ = dotted(addr);
  l.port_ = ntohs(addr.sin_port);
  return l;
}

std::optional<Socket> Listener::accept(Millis timeout) {
  if (!socket_.valid()) throw Error(Errc::IoError, "listener closed");
  if (!wait_readable(socket_.fd(), timeout)) return std::nullopt;
  for (;;) {
    int fd = ::accept4(socket_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
    if (fd >= 0) return Socket(fd);
    if (errno == EINTR) continue;
    throw Error(Errc::IoError, errno_text("accept"));
  }
}

Socket connect(const HostPort& to, Millis timeout) {
  auto addr = make_addr(to.host, to.port);
  Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC | SOCK_NONBLOCK, 0));
  if (!s.valid()) throw Error(Errc::IoError, errno_text("socket"));
  int rc = ::connect(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
  if (rc != 0 && errno != EINPROGRESS) {
    throw Error(Errc::IoError, errno_text("connect") + " " + to.to_string());
  }
  if (rc != 0) {
    pollfd p{s.fd(), POLLOUT, 0};
    if (::poll(&p, 1, static_cast<int>(timeout.count())) <= 0) {
      throw Error(Errc::IoError, "connect timeout " + to.to_string());
    }
    int err = 0;
    socklen_t len = sizeof(err);
    ::getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0) {
      throw Error(Errc::IoError, std::string("connect: ") + std::strerror(err) + " " +
                                     to.to_string());
    }
  }
  int flags = ::fcntl(s.fd(), F_GETFL);
  ::fcntl(s.fd(), F_SETFL, flags & ~O_NONBLOCK);
  int one = 1;
  ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return s;
}

Bytes read_http_request(Socket& socket, Millis timeout) {
  Bytes data;
  for (;;) {
    if (auto n = http::complete_request_length(data)) {
      data.resize(*n);
      return data;
    }
    auto chunk = socket.recv_some(timeout);
    if (chunk.empty()) throw Error(Errc::MalformedHttp, "connection closed mid-request");
    append(data, chunk);
  }
}

Bytes read_http_response(Socket& socket, Millis timeout) {
  Bytes data;
  bool eof = false;
  for (;;) {
    if (auto n = http::complete_response_length(data, eof)) {
      data.resize(*n);
      return data;
    }
    if (eof) throw Error(Errc::MalformedResponse, "connection closed");
    auto chunk = socket.recv_some(timeout);
    if (chunk.empty()) {
      eof = true;
    } else {
      append(data, chunk);
    }
  }
}

void send_framed(Socket& socket, ByteView message) {
  Bytes out;
  out.reserve(4 + message.size());
  const auto n = static_cast<std::uint32_t>(message.size());
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(n >> shift));
  append(out, message);
  socket.send_all(out);
}

std::optional<Bytes> recv_framed(Socket& socket, Millis timeout) {
  Bytes data;
  // Once a frame has started, the rest gets at least a few seconds.
  const auto rest = std::max(timeout, Millis(5000));
  auto need = [&](std::size_t n) {
    while (data.size() < n) {
      auto chunk = socket.recv_some(data.empty() ? timeout : rest, n - data.size());
      if (chunk.empty()) return false;
      append(data, chunk);
    }
    return true;
  };
  if (!need(4)) {
    if (data.empty()) return std::nullopt;
    throw Error(Errc::IoError, "peer closed mid-frame");
  }
  const std::size_t len = (std::size_t{data[0]} << 24) | (std::size_t{data[1]} << 16) |
                          (std::size_t{data[2]} << 8) | data[3];
  if (len > (16u << 20)) throw Error(Errc::IoError, "frame too large");
  if (!need(4 + len)) throw Error(Errc::IoError, "peer closed mid-frame");
  return Bytes(data.begin() + 4, data.end());
}

std::string LocalEndpoint::url() const {
  return "http://" + address() + ":" + std::to_string(port()) + "/";
}

LocalEndpoint LocalEndpoint::open(RandomSource& rng) {
  for (int attempt = 0; attempt < kLocalEndpointAttempts; ++attempt) {
    const auto b = rng.uniform(0, 255);
    const auto c = rng.uniform(0, 255);
    const auto d = rng.uniform(1, 254);
    const auto port = static_cast<std::uint16_t>(rng.uniform(kLocalPortMin, kLocalPortMax));
    const std::string host = "127." + std::to_string(b) + "." + std::to_string(c) + "." +
                             std::to_string(d);
    try {
      LocalEndpoint ep;
      ep.listener_ = Listener::bind(host, port, 4);
      return ep;
    } catch (const Error& e) {
      if (e.code() != Errc::PortInUse && e.code() != Errc::IoError) throw;
    }
  }
  throw Error(Errc::NoPortAvailable, "no free loopback endpoint after 64 attempts");
}

bool is_loopback(const std::string& dotted_addr) {
  return dotted_addr.rfind("127.", 0) == 0;
}

}  // namespace eapsh::net
