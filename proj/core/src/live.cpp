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

#include "eapsh/live.hpp"

#include <openssl/evp.h>

#include <thread>
#include <vector>

#include "eapsh/error.hpp"

namespace eapsh {

TcpEapTransport TcpEapTransport::connect(const HostPort& as, IoRecorder* recorder) {
  auto socket = net::connect(as);
  if (recorder) {
    recorder->record({IoRecord::Channel::Eap, IoRecord::Op::Connect, socket.local_address(),
                      as.to_string(), 0});
  }
  return TcpEapTransport(std::move(socket));
}

void TcpEapTransport::send(ByteView packet) { net::send_framed(socket_, packet); }

std::optional<Bytes> TcpEapTransport::receive(std::chrono::milliseconds timeout) {
  try {
    return net::recv_framed(socket_, timeout);
  } catch (const Error& e) {
    if (e.code() == Errc::Timeout) return std::nullopt;
    throw;
  }
}

std::string msk_fingerprint(const Msk& msk) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int n = 0;
  EVP_Digest(msk.data(), msk.size(), digest, &n, EVP_sha256(), nullptr);
  return to_hex(ByteView(digest, 8));
}

LiveAuthServer::LiveAuthServer(AuthServer& server, const HostPort& listen, LogFn log)
    : server_(server),
      dispatcher_(server),
      listener_(net::Listener::bind(listen.host, listen.port)),
      log_(std::move(log)) {}

void LiveAuthServer::log(const std::string& line) const {
  if (log_) log_(line);
}

std::vector<LiveSessionRecord> LiveAuthServer::sessions() const {
  std::lock_guard lock(mu_);
  std::vector<LiveSessionRecord> out;
  for (const auto& [id, rec] : sessions_) out.push_back(rec);
  return out;
}

void LiveAuthServer::serve(const std::atomic<bool>& stop) {
  std::vector<std::thread> workers;
  std::uint32_t next_id = 1;
  log("authentication server listening on " + endpoint().to_string());
  while (!stop) {
    auto conn = listener_.accept(std::chrono::milliseconds(200));
    dispatcher_.sweep(server_.clock().now());
    if (!conn) continue;
    const auto id = next_id++;
    log("session " + std::to_string(id) + ": supplicant connected from " + conn->peer_address());
    workers.emplace_back(
        [this, id, &stop, s = std::move(*conn)]() mutable { handle(std::move(s), id, stop); });
  }
  for (auto& w : workers) w.join();
  listener_.close();
}

void LiveAuthServer::handle(net::Socket socket, std::uint32_t id, const std::atomic<bool>& stop) {
  const auto idle = std::chrono::duration_cast<std::chrono::milliseconds>(
      server_.settings().inactivity_timeout);
  {
    std::lock_guard lock(mu_);
    sessions_[id].session = id;
  }
  auto deliver = [&](const std::vector<Envelope>& replies) {
    bool finished = false;
    for (const auto& env : replies) {
      Bytes eap = env.payload;
      if (env.type == EnvelopeType::Accept) {
        auto [msk, success] = split_accept(env);
        transcript_.note({0, "as", "to_authenticator", "msk", "", kMskSize});
        {
          std::lock_guard lock(mu_);
          sessions_[id].msk = msk;
        }
        log("session " + std::to_string(id) + ": Success, authenticator holds MSK " +
            msk_fingerprint(msk) + "...");
        eap = std::move(success);
        finished = true;
      } else if (env.type == EnvelopeType::Reject) {
        log("session " + std::to_string(id) + ": Failure");
        finished = true;
      }
      transcript_.record(eap, "as", "to_supplicant");
      net::send_framed(socket, eap);
    }
    return finished;
  };

  try {
    bool finished = deliver(dispatcher_.handle({EnvelopeType::Start, id, {}}));
    auto waited = std::chrono::milliseconds(0);
    while (!finished && !stop) {
      std::optional<Bytes> packet;
      try {
        packet = net::recv_framed(socket, std::chrono::milliseconds(200));
        waited = std::chrono::milliseconds(0);
      } catch (const Error& e) {
        if (e.code() != Errc::Timeout) throw;
        waited += std::chrono::milliseconds(200);
        if (waited >= idle) {
          log("session " + std::to_string(id) + ": idle timeout");
          break;
        }
        continue;
      }
      if (!packet) {
        log("session " + std::to_string(id) + ": supplicant disconnected");
        break;
      }
      transcript_.record(*packet, "supplicant", "to_as");
      finished = deliver(dispatcher_.handle({EnvelopeType::Eap, id, *packet}));
    }
  } catch (const Error& e) {
    log("session " + std::to_string(id) + ": " + e.what());
  }
  std::lock_guard lock(mu_);
  sessions_[id].decision = dispatcher_.decision(id);
  if (sessions_[id].decision && sessions_[id].decision->reason) {
    log("session " + std::to_string(id) + ": " + sessions_[id].decision->detail);
  }
}

}  // namespace eapsh
