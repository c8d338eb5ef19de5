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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

// Golden codec vectors, one per line:
//
//   frame <name> code=<n> id=<n> flags=<hex> total=<n|-> payload=<hex|-> packet=<hex>
//   fragment <name> max=<n> semantic=<name> message=<hex|seq:N> packets=<hex>,<hex>,...
//   ! <name> packet=<hex> error=<Errc>
//
// '#' starts a comment. Payload and message "seq:N" stand for bytes i mod 256.

namespace eapsh {

struct VectorReport {
  std::size_t total = 0;
  std::size_t passed = 0;
  std::vector<std::string> failures;  // "<name>: <reason>"
};

VectorReport check_vectors(std::string_view text);
// Throws Error(IoError) if the file cannot be read.
VectorReport check_vector_file(const std::filesystem::path& path);

}  // namespace eapsh
