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
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "eapsh/bytes.hpp"
#include "eapsh/error.hpp"
#include "eapsh/supplicant.hpp"
#include "eapsh/transcript.hpp"
#include "eapsh/tunnel.hpp"

namespace eapsh {

// FIFO of byte messages with blocking, timed receive.
class MessageQueue {
 public:
  void push(Bytes message);
  // nullopt on timeout or after close() once drained.
  std::optional<Bytes> pop(std::chrono::milliseconds timeout);
  void close();
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Bytes> queue_;
  bool closed_ = false;
};

// One duplex leg: a queue in each direction.
struct VirtualLink {
  MessageQueue forward;   // toward the AS
  MessageQueue backward;  // toward the supplicant

  void close() {
    forward.close();
    backward.close();
  }
};

// The supplicant's end of the supplicant <-> authenticator leg.
class LinkTransport final : public EapTransport {
 public:
  explicit LinkTransport(VirtualLink& link) : link_(link) {}
  void send(ByteView packet) override { link_.forward.push(Bytes(packet.begin(), packet.end())); }
  std::optional<Bytes> receive(std::chrono::milliseconds timeout) override {
    return link_.backward.pop(timeout);
  }

 private:
  VirtualLink& link_;
};

enum class Scenario { Enroll, Reauth, BadPassword, ExpiredCert, Impersonation, RestartAs };

const char* to_string(Scenario s);
std::optional<Scenario> parse_scenario(std::string_view name);
std::vector<Scenario> all_scenarios();

enum class Outcome { Success, Failure, Timeout };

const char* to_string(Outcome o);

struct ScenarioCounters {
  std::size_t frames = 0;
  std::size_t fragments = 0;  // frames belonging to multi-fragment messages
  std::size_t s_frames = 0;
  std::size_t h_frames = 0;
  std::size_t c_frames = 0;
  std::size_t portal_requests = 0;
  std::size_t browser_requests = 0;
  std::size_t certificates_issued = 0;
};

struct ScenarioTimings {
  std::optional<std::chrono::microseconds> csr_generation;
  std::optional<std::chrono::microseconds> issuance;
  std::chrono::microseconds total{0};  // the measured attempt, fixture setup excluded
};

struct ScenarioResult {
  Scenario scenario = Scenario::Enroll;
  Outcome outcome = Outcome::Failure;
  bool msk_match = false;
  std::optional<Errc> error;          // supplicant side or AS decision
  std::string detail;
  std::string as_fallback_reason;     // why phase 1 did not succeed outright
  Transcript transcript;              // the measured attempt only
  ScenarioCounters counters;
  ScenarioTimings timings;
  Bytes delivered_to_browser;         // what the supplicant wrote
  Bytes browser_received;             // what the scripted browser read
  std::vector<IoRecord> io;
  std::string local_endpoint_url;
  int setup_attempts = 0;
};

struct HarnessOptions {
  int key_bits = 2048;
  std::chrono::seconds timeout{20};
  std::uint64_t seed = 1;
  std::filesystem::path assets_dir;  // empty: the built-in default
  std::filesystem::path work_dir;    // empty: a fresh temporary directory
  bool keep_work_dir = false;
};

// Builds the PKI and user store, wires supplicant, authenticator, AS and
// portal, and runs the named flow. Throws Error(FixtureError).
ScenarioResult run_scenario(Scenario scenario, const HarnessOptions& options = {});

// Whether the outcome is the one the scenario is meant to produce.
bool expected_outcome(const ScenarioResult& result);

// I/O of the supplicant actor before Success that is not EAP transport or
// its own loopback browser endpoint. Empty means isolation held.
std::vector<std::string> isolation_violations(const ScenarioResult& result);

std::filesystem::path default_assets_dir();

// Fixture users.
inline constexpr const char* kFixtureUser = "alice";
inline constexpr const char* kFixturePassword = "s3cret";
inline constexpr const char* kFixtureOtherUser = "bob";
inline constexpr const char* kFixtureOtherPassword = "hunter2";

// One scripted browser action against the supplicant's endpoint.
struct BrowserStep {
  std::string method;  // GET or POST
  std::string path;
  std::string form;    // urlencoded body for POST
};

struct BrowserRun {
  Bytes received;
  std::vector<int> statuses;
  std::optional<std::string> error;
};

// Plays the steps, one connection per request. Stops at the first error.
BrowserRun run_browser(const std::string& base_url, const std::vector<BrowserStep>& steps,
                       std::chrono::milliseconds timeout);

std::string form_encode(const std::vector<std::pair<std::string, std::string>>& fields);

}  // namespace eapsh
