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

namespace eapsh {

using SystemTime = std::chrono::system_clock::time_point;
using Seconds = std::chrono::seconds;

class Clock {
 public:
  virtual ~Clock() = default;
  virtual SystemTime now() const = 0;
};

class SystemClock final : public Clock {
 public:
  SystemTime now() const override { return std::chrono::system_clock::now(); }
};

// Test clock; only moves when told to. Safe to read from several threads.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(SystemTime start);
  ManualClock();

  SystemTime now() const override;
  void set(SystemTime t);
  void advance(std::chrono::system_clock::duration d);

 private:
  std::atomic<std::chrono::system_clock::rep> ticks_;
};

// Shared process clock for callers that do not inject one.
const Clock& system_clock();

// Whole seconds since the epoch, as used by X.509 validity fields.
std::int64_t to_unix(SystemTime t);
SystemTime from_unix(std::int64_t seconds);

}  // namespace eapsh
