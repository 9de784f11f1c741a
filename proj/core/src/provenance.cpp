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

#include "asrkit/provenance.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "json.hpp"

#include "asrkit/error.hpp"

namespace asrkit {
namespace {

std::uint64_t fnv1a_update(std::uint64_t h, std::string_view bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

std::string fnv1a_hex(std::string_view bytes) { return hex64(fnv1a_update(1469598103934665603ull, bytes)); }

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::uint64_t h = 1469598103934665603ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    h = fnv1a_update(h, std::string_view(buf, static_cast<std::size_t>(in.gcount())));
  }
  return hex64(h);
}

void OutputHeader::add_input(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) {
    // Directories are summarized by the sorted list of regular files they hold.
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(path)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::string acc;
    for (const auto& f : files) {
      acc += std::filesystem::relative(f, path).generic_string();
      acc += ':';
      acc += file_digest(f);
      acc += '\n';
    }
    inputs.emplace_back(path.generic_string(), fnv1a_hex(acc));
  } else {
    inputs.emplace_back(path.generic_string(), file_digest(path));
  }
}

std::string OutputHeader::json_line() const {
  nlohmann::ordered_json meta;
  meta["tool"] = "asrkit";
  meta["version"] = std::string(kVersion);
  meta["command"] = command;
  meta["seed"] = seed;
  nlohmann::ordered_json in = nlohmann::ordered_json::object();
  for (const auto& [p, d] : inputs) in[p] = d;
  meta["inputs"] = in;
  nlohmann::ordered_json line;
  line["_meta"] = meta;
  return line.dump();
}

std::vector<std::string> OutputHeader::comment_lines(std::string_view prefix) const {
  std::vector<std::string> out;
  out.push_back(std::string(prefix) + "asrkit " + std::string(kVersion) + " command=" + command +
                " seed=" + std::to_string(seed));
  for (const auto& [p, d] : inputs) out.push_back(std::string(prefix) + "input " + p + " fnv1a64=" + d);
  return out;
}

bool is_meta_line(std::string_view line) {
  const auto first = line.find_first_not_of(" \t");
  return first != std::string_view::npos && line.substr(first).rfind("{\"_meta\"", 0) == 0;
}

}  // namespace asrkit
