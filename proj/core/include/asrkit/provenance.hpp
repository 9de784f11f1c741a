// Copyright 2026 The asrkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace asrkit {

inline constexpr std::string_view kVersion = "0.1.0";

/// 64-bit FNV-1a, hex encoded. Used for input digests, not for security.
std::string fnv1a_hex(std::string_view bytes);
std::string file_digest(const std::filesystem::path& path);

/// Metadata written as the first record of every output file.
struct OutputHeader {
  std::string command;
  std::uint64_t seed = 42;
  std::vector<std::pair<std::string, std::string>> inputs;  // (path, digest)

  void add_input(const std::filesystem::path& path);

  /// {"_meta": {...}} on one line, keys in fixed order.
  std::string json_line() const;

  /// "# asrkit <version> command=... seed=... input=path:digest" lines.
  std::vector<std::string> comment_lines(std::string_view prefix = "# ") const;
};

/// True for a JSONL line carrying the "_meta" header record.
bool is_meta_line(std::string_view line);

}  // namespace asrkit
