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

#include "eapsh/clock.hpp"

namespace eapsh {

ManualClock::ManualClock(SystemTime start)
    : ticks_(start.time_since_epoch().count()) {}

ManualClock::ManualClock()
    : ManualClock(std::chrono::time_point_cast<Seconds>(
          std::chrono::system_clock::now())) {}

SystemTime ManualClock::now() const {
  return SystemTime(std::chrono::system_clock::duration(ticks_.load()));
}

void ManualClock::set(SystemTime t) { ticks_.store(t.time_since_epoch().count()); }

void ManualClock::advance(std::chrono::system_clock::duration d) {
  ticks_.fetch_add(d.count());
}

const Clock& system_clock() {
  static const SystemClock clock;
  return clock;
}

std::int64_t to_unix(SystemTime t) {
  return std::chrono::duration_cast<Seconds>(t.time_since_epoch()).count();
}

SystemTime from_unix(std::int64_t seconds) {
  return SystemTime(std::chrono::duration_cast<std::chrono::system_clock::duration>(
      Seconds(seconds)));
}

}  // namespace eapsh
