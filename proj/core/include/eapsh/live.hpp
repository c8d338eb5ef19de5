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
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "eapsh/auth_server.hpp"
#include "eapsh/envelope.hpp"
#include "eapsh/net.hpp"
#include "eapsh/supplicant.hpp"
#include "eapsh/transcript.hpp"

// Loopback deployment: the supplicant reaches an AS process over TCP, one
// connection per authentication, each EAP packet behind a 4-byte length.
// The AS side embeds the pass-through authenticator.
namespace eapsh {

class TcpEapTransport final : public EapTransport {
 public:
  // Throws Error(IoError).
  static TcpEapTransport connect(const HostPort& as, IoRecorder* recorder = nullptr);

  void send(ByteView packet) override;
  std::optional<Bytes> receive(std::chrono::milliseconds timeout) override;

 private:
  explicit TcpEapTransport(net::Socket socket) : socket_(std::move(socket)) {}
  net::Socket socket_;
};

using LogFn = std::function<void(const std::string&)>;

struct LiveSessionRecord {
  std::uint32_t session = 0;
  std::optional<Msk> msk;  // what the authenticator received
  std::optional<AsDecision> decision;
};

class LiveAuthServer {
 public:
  // Binds immediately. Throws Error(PortInUse).
  LiveAuthServer(AuthServer& server, const HostPort& listen, LogFn log = {});

  // Serves until `stop` becomes true, one thread per supplicant connection.
  void serve(const std::atomic<bool>& stop);

  HostPort endpoint() const { return listener_.endpoint(); }
  const Transcript& transcript() const { return transcript_; }
  std::vector<LiveSessionRecord> sessions() const;

 private:
  void handle(net::Socket socket, std::uint32_t session_id, const std::atomic<bool>& stop);
  void log(const std::string& line) const;

  AuthServer& server_;
  AsDispatcher dispatcher_;
  net::Listener listener_;
  LogFn log_;
  Transcript transcript_;
  mutable std::mutex mu_;
  std::map<std::uint32_t, LiveSessionRecord> sessions_;
};

// Short, non-secret identifier for an MSK in logs.
std::string msk_fingerprint(const Msk& msk);

}  // namespace eapsh
