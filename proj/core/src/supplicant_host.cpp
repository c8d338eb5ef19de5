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

#include <poll.h>

#include <cerrno>
#include <cstdlib>
#include <thread>

#include "eapsh/http.hpp"
#include "eapsh/supplicant.hpp"

namespace eapsh {

const char* to_string(IoRecord::Channel c) {
  switch (c) {
    case IoRecord::Channel::Eap: return "eap";
    case IoRecord::Channel::Browser: return "browser";
    case IoRecord::Channel::Other: return "other";
  }
  return "?";
}

const char* to_string(IoRecord::Op o) {
  switch (o) {
    case IoRecord::Op::Send: return "send";
    case IoRecord::Op::Receive: return "receive";
    case IoRecord::Op::Connect: return "connect";
    case IoRecord::Op::Accept: return "accept";
    case IoRecord::Op::Listen: return "listen";
    case IoRecord::Op::Spawn: return "spawn";
  }
  return "?";
}

void IoRecorder::record(IoRecord r) {
  std::lock_guard lock(mu_);
  r.before_success = !success_;
  records_.push_back(std::move(r));
}

std::vector<IoRecord> IoRecorder::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

void IoRecorder::mark_success() {
  std::lock_guard lock(mu_);
  success_ = true;
}

namespace {

void spawn_browser(const LaunchBrowser& launch) {
  if (launch.command.empty()) return;
  std::thread([cmd = launch.command] {
    if (std::system(cmd.c_str()) != 0) return;
  }).detach();
}

}  // namespace

SupplicantHost::SupplicantHost(SupplicantSession& session, EapTransport& transport,
                               SupplicantHostOptions options)
    : session_(session), transport_(transport), options_(std::move(options)) {
  if (!options_.launcher) options_.launcher = spawn_browser;
}

void SupplicantHost::send_frame(const EapShFrame& frame) {
  auto bytes = encode_frame(frame, session_.config().max_eap_packet);
  if (options_.recorder) {
    options_.recorder->record({IoRecord::Channel::Eap, IoRecord::Op::Send, "eap", "authenticator",
                               bytes.size()});
  }
  transport_.send(bytes);
}

void SupplicantHost::close_browser() {
  browser_.reset();
  close_after_delivery_ = false;
}

void SupplicantHost::apply(std::vector<SupplicantAction>& actions) {
  for (auto& action : actions) {
    if (auto* launch = std::get_if<LaunchBrowser>(&action)) {
      if (options_.recorder) {
        auto* ep = session_.local_endpoint();
        const std::string local = ep ? ep->address() + ":" + std::to_string(ep->port()) : "";
        options_.recorder->record(
            {IoRecord::Channel::Browser, IoRecord::Op::Listen, local, "", 0});
        options_.recorder->record(
            {IoRecord::Channel::Browser, IoRecord::Op::Spawn, local, launch->url, 0});
      }
      options_.launcher(*launch);
    } else if (auto* deliver = std::get_if<DeliverToBrowser>(&action)) {
      append(browser_bytes_, deliver->bytes);
      if (!browser_) continue;
      if (options_.recorder) {
        options_.recorder->record({IoRecord::Channel::Browser, IoRecord::Op::Send,
                                   browser_->local_address(), browser_->peer_address(),
                                   deliver->bytes.size()});
      }
      try {
        browser_->send_all(deliver->bytes);
      } catch (const Error&) {
        close_browser();
        continue;
      }
      auto conn = http::find_header(deliver->bytes, "Connection");
      if (close_after_delivery_ || (conn && (*conn == "close" || *conn == "Close"))) {
        close_browser();
      }
    } else if (std::holds_alternative<CloseLocalEndpoint>(action)) {
      close_browser();
      idle_.clear();
      if (auto* ep = session_.local_endpoint()) ep->close();
    }
  }
}

void SupplicantHost::serve_browser() {
  auto* ep = session_.local_endpoint();
  if (!ep || !ep->is_open()) throw Error(Errc::InvariantViolation, "local endpoint is closed");
  const auto timeout = std::chrono::duration_cast<net::Millis>(session_.config().inactivity_timeout);
  const auto deadline = std::chrono::steady_clock::now() + timeout;

  // Pending bytes per open browser connection; the active one (browser_) is
  // parked in idle_ while a request is being read.
  if (browser_) {
    idle_.push_back({std::move(*browser_), {}});
    browser_.reset();
  }

  for (;;) {
    const auto left = std::chrono::duration_cast<net::Millis>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw Error(Errc::Timeout, "no browser request");

    std::vector<pollfd> fds;
    fds.push_back({ep->listener_fd(), POLLIN, 0});
    for (auto& c : idle_) fds.push_back({c.socket.fd(), POLLIN, 0});
    int rc = ::poll(fds.data(), fds.size(), static_cast<int>(left.count()));
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw Error(Errc::IoError, "poll");
    }
    if (rc == 0) continue;

    if (fds[0].revents & POLLIN) {
      if (auto s = ep->listener().accept(net::Millis(0))) {
        if (options_.recorder) {
          options_.recorder->record({IoRecord::Channel::Browser, IoRecord::Op::Accept,
                                     s->local_address(), s->peer_address(), 0});
        }
        idle_.push_back({std::move(*s), {}});
      }
    }
    for (std::size_t i = 1; i < fds.size(); ++i) {
      if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      auto& conn = idle_[i - 1];
      Bytes chunk;
      try {
        chunk = conn.socket.recv_some(net::Millis(0));
      } catch (const Error&) {
        chunk.clear();
      }
      if (chunk.empty()) {
        conn.socket.close();
        continue;
      }
      if (options_.recorder) {
        options_.recorder->record({IoRecord::Channel::Browser, IoRecord::Op::Receive,
                                   conn.socket.local_address(), conn.socket.peer_address(),
                                   chunk.size()});
      }
      append(conn.pending, chunk);
      std::optional<std::size_t> n;
      try {
        n = http::complete_request_length(conn.pending);
      } catch (const Error&) {
        conn.socket.send_all(to_bytes(
            "HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\nConnection: close\r\n\r\n"));
        conn.socket.close();
        continue;
      }
      if (!n) continue;

      Bytes request(conn.pending.begin(), conn.pending.begin() + static_cast<long>(*n));
      conn.pending.erase(conn.pending.begin(), conn.pending.begin() + static_cast<long>(*n));
      auto hdr = http::find_header(request, "Connection");
      close_after_delivery_ = hdr && (*hdr == "close" || *hdr == "Close");
      browser_.emplace(std::move(conn.socket));
      idle_.erase(idle_.begin() + static_cast<long>(i - 1));

      auto out = session_.relay_cycle(request);
      if (out.frame) send_frame(*out.frame);
      std::erase_if(idle_, [](const BrowserConn& c) { return !c.socket.valid(); });
      return;
    }
    std::erase_if(idle_, [](const BrowserConn& c) { return !c.socket.valid(); });
  }
}

SupplicantRunResult SupplicantHost::run() {
  SupplicantRunResult result;
  const auto timeout = std::chrono::duration_cast<net::Millis>(session_.config().inactivity_timeout);
  try {
    for (;;) {
      if (session_.done() || session_.failed()) break;
      if (session_.awaiting_browser()) {
        serve_browser();
        continue;
      }
      auto packet = transport_.receive(timeout);
      if (!packet) throw Error(Errc::Timeout, "no EAP traffic from the authenticator");
      if (options_.recorder) {
        options_.recorder->record({IoRecord::Channel::Eap, IoRecord::Op::Receive, "eap",
                                   "authenticator", packet->size()});
      }
      auto out = session_.step(decode_frame(*packet));
      apply(out.actions);
      if (session_.done() && options_.recorder) options_.recorder->mark_success();
      if (out.frame) send_frame(*out.frame);
    }
  } catch (const Error& e) {
    result.error = e.code();
    result.detail = e.what();
  }
  close_browser();
  idle_.clear();
  if (auto* ep = session_.local_endpoint()) ep->close();

  result.success = session_.done();
  result.msk = session_.msk();
  if (!result.error && session_.failure()) result.error = session_.failure();
  if (result.detail.empty()) result.detail = session_.failure_detail();
  result.browser_bytes = std::move(browser_bytes_);
  return result;
}

}  // namespace eapsh
