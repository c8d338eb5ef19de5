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
#include <deque>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "eapsh/bytes.hpp"
#include "eapsh/clock.hpp"
#include "eapsh/codec.hpp"
#include "eapsh/config.hpp"
#include "eapsh/error.hpp"
#include "eapsh/net.hpp"
#include "eapsh/pki.hpp"
#include "eapsh/random.hpp"
#include "eapsh/tunnel.hpp"

namespace eapsh {

inline constexpr Seconds kDefaultInactivityTimeout{300};

// Mirrors a wpa_supplicant network block:
//
//   network={
//     ssid="campus"
//     key_mgmt=WPA-EAP
//     eap=SH
//     ca_path="/etc/eapsh/ca"
//     client_cert="/var/lib/eapsh/user.pem"
//     private_key="/var/lib/eapsh/user.key"
//     private_key_password="secret"
//     browser_command="firefox %s"
//   }
struct SupplicantConfig {
  std::string ssid;
  std::string key_mgmt = "WPA-EAP";
  std::string eap = "SH";
  std::filesystem::path ca_path;
  std::filesystem::path client_cert;
  std::filesystem::path private_key;
  std::string private_key_password;
  std::string browser_command;  // "%s" is replaced by the local URL
  int csr_key_bits = kDefaultUserKeyBits;
  std::size_t max_eap_packet = kDefaultMaxEapPacket;
  Seconds inactivity_timeout = kDefaultInactivityTimeout;

  // Throws Error(ConfigError).
  static SupplicantConfig from_kv(const KeyValueConfig& kv);
  static SupplicantConfig load(const std::filesystem::path& path);
  KeyValueConfig to_kv() const;
  void validate() const;
};

// Substitutes every "%s" of the template.
std::string browser_command_for(const std::string& command_template, const std::string& url);

struct Credentials {
  std::vector<Certificate> chain;  // leaf first
  KeyPair key;
};

// Cached credentials from the configured paths, or nullopt when either file
// is missing. Throws Error(ConfigError) when present but unusable.
std::optional<Credentials> load_credentials(const SupplicantConfig& config);

enum class SupplicantPhase {
  Phase1,
  AwaitStartOrSuccess,
  Phase2Http,
  Phase2AwaitCert,
  Restarting,
  Done,
  Failed,
};

const char* to_string(SupplicantPhase p);

struct LaunchBrowser {
  std::string url;
  std::string command;
};
struct DeliverToBrowser {
  Bytes bytes;
};
struct CloseLocalEndpoint {};

using SupplicantAction = std::variant<LaunchBrowser, DeliverToBrowser, CloseLocalEndpoint>;

struct SupplicantOutput {
  std::optional<EapShFrame> frame;
  std::vector<SupplicantAction> actions;
};

struct SupplicantTimings {
  std::optional<std::chrono::microseconds> csr_generation;
};

struct SupplicantOptions {
  const Clock* clock = nullptr;
  RandomSource* rng = nullptr;
  EngineFactory engine_factory;
  // Replaces the CSR common name; used to exercise the AS's defenses.
  std::function<std::string(const std::string&)> csr_name_override;
};

// Keeps fragmented outbound messages and reassembles inbound ones. Frames
// come out with identifier 0; the owner stamps identifiers.
class FragmentChannel {
 public:
  FragmentChannel(EapCode out_code, std::size_t max_eap_packet)
      : out_code_(out_code), max_(max_eap_packet) {}

  EapShFrame send(ByteView message, Semantic semantic);
  bool sending() const { return !outbox_.empty(); }
  EapShFrame next();
  ReassemblyBuffer& inbound() { return reasm_; }
  void reset();

 private:
  EapCode out_code_;
  std::size_t max_;
  std::deque<EapShFrame> outbox_;
  ReassemblyBuffer reasm_;
};

class SupplicantSession {
 public:
  // Loads anchors and any cached credentials. Throws Error(ConfigError).
  explicit SupplicantSession(SupplicantConfig config, SupplicantOptions options = {});

  // Pre: not Done/Failed. Throws Error(ProtocolViolation) and moves to Failed
  // when the frame does not fit the phase.
  SupplicantOutput step(const EapShFrame& inbound);

  // Pre: Phase2Http, waiting for the browser. Seals a full HTTP request and
  // returns its first H-flagged fragment. Throws Error(MalformedHttp).
  SupplicantOutput relay_cycle(ByteView http_request);

  SupplicantPhase phase() const { return phase_; }
  int round() const { return round_; }
  bool done() const { return phase_ == SupplicantPhase::Done; }
  bool failed() const { return phase_ == SupplicantPhase::Failed; }
  // True while the AS is waiting on a browser request.
  bool awaiting_browser() const;
  const std::optional<Msk>& msk() const { return msk_; }
  const std::optional<std::string>& pending_identity() const { return pending_identity_; }
  const std::optional<Credentials>& credentials() const { return credentials_; }
  net::LocalEndpoint* local_endpoint() { return endpoint_ ? &*endpoint_ : nullptr; }
  const SupplicantConfig& config() const { return config_; }
  const SupplicantTimings& timings() const { return timings_; }
  std::optional<Errc> failure() const { return failure_; }
  const std::string& failure_detail() const { return failure_detail_; }

  // Exposed for tests; normally reached through step().
  std::string open_local_endpoint();
  Bytes deliver_response(ByteView http_response, std::vector<SupplicantAction>& actions);
  EapShFrame enroll();
  void install_and_restart(ByteView cert_message);

 private:
  SupplicantOutput step_inner(const EapShFrame& inbound);
  SupplicantOutput begin_phase1();
  SupplicantOutput on_handshake(const EapShFrame& inbound);
  SupplicantOutput on_await(const EapShFrame& inbound);
  SupplicantOutput on_http(const EapShFrame& inbound);
  SupplicantOutput on_cert(const EapShFrame& inbound);
  SupplicantOutput on_restart(const EapShFrame& inbound);
  [[noreturn]] void violation(const std::string& what);
  void fail(Errc code, const std::string& detail);
  EapShFrame stamp(EapShFrame frame) const;
  TunnelSession& tunnel();

  SupplicantConfig config_;
  SupplicantOptions options_;
  const Clock& clock_;
  RandomSource& rng_;
  std::vector<Certificate> anchors_;
  std::optional<Credentials> credentials_;

  SupplicantPhase phase_ = SupplicantPhase::Phase1;
  std::optional<TunnelSession> tunnel_;
  FragmentChannel channel_;
  std::optional<net::LocalEndpoint> endpoint_;
  std::optional<std::string> pending_identity_;
  std::optional<KeyPair> pending_key_;
  bool awaiting_response_ = false;
  int round_ = 0;
  std::uint8_t last_id_ = 0;
  std::optional<Msk> msk_;
  std::optional<Errc> failure_;
  std::string failure_detail_;
  SupplicantTimings timings_;
};

// ---- host: socket I/O around a session ----

// Carries EAP packets between the supplicant and the authenticator.
class EapTransport {
 public:
  virtual ~EapTransport() = default;
  virtual void send(ByteView packet) = 0;
  // nullopt on timeout or when the link closed.
  virtual std::optional<Bytes> receive(std::chrono::milliseconds timeout) = 0;
};

// Every I/O operation performed by the supplicant actor.
struct IoRecord {
  enum class Channel { Eap, Browser, Other };
  enum class Op { Send, Receive, Connect, Accept, Listen, Spawn };
  Channel channel;
  Op op;
  std::string local;
  std::string peer;
  std::size_t bytes = 0;
  bool before_success = true;
};

const char* to_string(IoRecord::Channel c);
const char* to_string(IoRecord::Op o);

class IoRecorder {
 public:
  void record(IoRecord r);
  std::vector<IoRecord> records() const;
  void mark_success();

 private:
  mutable std::mutex mu_;
  std::vector<IoRecord> records_;
  bool success_ = false;
};

struct SupplicantHostOptions {
  // Called for LaunchBrowser; by default the command is run with /bin/sh.
  std::function<void(const LaunchBrowser&)> launcher;
  IoRecorder* recorder = nullptr;
};

struct SupplicantRunResult {
  bool success = false;
  std::optional<Msk> msk;
  std::optional<Errc> error;
  std::string detail;
  Bytes browser_bytes;  // everything written to browser connections
};

class SupplicantHost {
 public:
  SupplicantHost(SupplicantSession& session, EapTransport& transport,
                 SupplicantHostOptions options = {});

  // Runs until Success, Failure, or inactivity.
  SupplicantRunResult run();

 private:
  void send_frame(const EapShFrame& frame);
  void apply(std::vector<SupplicantAction>& actions);
  void serve_browser();
  void close_browser();

  struct BrowserConn {
    net::Socket socket;
    Bytes pending;
  };

  SupplicantSession& session_;
  EapTransport& transport_;
  SupplicantHostOptions options_;
  std::optional<net::Socket> browser_;  // connection owed the next response
  std::vector<BrowserConn> idle_;
  bool close_after_delivery_ = false;
  Bytes browser_bytes_;
};

}  // namespace eapsh
