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

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

#include "asrkit/audio.hpp"
#include "asrkit/corpus.hpp"
#include "asrkit/error.hpp"

namespace asrkit::corpus {
namespace {

using json = nlohmann::ordered_json;

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.emplace_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  for (auto& f : out) {
    if (!f.empty() && f.back() == '\r') f.pop_back();
  }
  return out;
}

json to_json(const Utterance& u) {
  json j;
  j["id"] = u.id;
  j["audio_path"] = u.audio_path;
  j["duration_sec"] = u.duration_sec;
  j["speaker_id"] = u.speaker_id;
  j["gender"] = std::string(to_string(u.gender));
  j["text"] = u.text;
  j["dataset"] = u.dataset;
  j["subset"] = std::string(to_string(u.subset));
  return j;
}

Utterance from_json(const json& j, std::size_t line_no) {
  try {
    Utterance u;
    u.id = j.at("id").get<std::string>();
    u.audio_path = j.at("audio_path").get<std::string>();
    u.duration_sec = j.at("duration_sec").get<double>();
    u.speaker_id = j.at("speaker_id").get<std::string>();
    u.gender = parse_gender(j.at("gender").get<std::string>());
    u.text = j.at("text").get<std::string>();
    u.dataset = j.at("dataset").get<std::string>();
    u.subset = parse_subset(j.at("subset").get<std::string>());
    if (u.duration_sec < 0.0) throw Error(Errc::MalformedManifest, "negative duration");
    return u;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedManifest, "line " + std::to_string(line_no) + ": " + e.what());
  }
}

std::map<std::string, Gender> read_speaker_genders(const std::filesystem::path& root) {
  std::map<std::string, Gender> out;
  const auto path = root / "speakers.tsv";
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    const auto fields = split_tabs(line);
    if (fields.size() < 2) continue;
    const auto speaker = trim(fields[0]);
    if (speaker.empty() || speaker == "speaker_id" || speaker == "speaker") continue;
    out[speaker] = parse_gender(trim(fields[1]));
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  std::replace(text.begin(), text.end(), '\n', ' ');
  std::replace(text.begin(), text.end(), '\r', ' ');
  return trim(text);
}

std::string id_from_path(std::string_view dataset, const std::filesystem::path& rel) {
  auto p = rel;
  p.replace_extension();
  return std::string(dataset) + "/" + p.generic_string();
}

// Row of an index file before audio probing.
struct IndexRow {
  std::string id;
  std::string path;
  std::string text;
  bool has_text = false;
  std::string speaker;
  std::string gender;
};

void add_probed(BuildResult& result, const std::filesystem::path& root, std::string_view dataset,
                const std::map<std::string, Gender>& genders, const IndexRow& row) {
  std::filesystem::path audio = row.path;
  if (audio.is_relative()) audio = root / audio;
  if (!std::filesystem::exists(audio)) {
    result.missing_audio.push_back(row.path);
    return;
  }
  if (!row.has_text) {
    result.missing_transcript.push_back(row.path);
    return;
  }
  audio::WavInfo info;
  try {
    info = audio::probe_wav(audio);
  } catch (const Error&) {
    result.unreadable_audio.push_back(row.path);
    return;
  }
  Utterance u;
  u.id = row.id.empty() ? id_from_path(dataset, std::filesystem::path(row.path)) : row.id;
  u.audio_path = audio.generic_string();
  u.duration_sec = static_cast<double>(info.frames) / static_cast<double>(info.sample_rate_hz);
  u.speaker_id = row.speaker.empty() ? "unknown" : row.speaker;
  u.gender = parse_gender(row.gender);
  if (u.gender == Gender::Unknown) {
    if (const auto it = genders.find(u.speaker_id); it != genders.end()) u.gender = it->second;
  }
  u.text = row.text;
  u.dataset = std::string(dataset);
  result.manifest.utterances.push_back(std::move(u));
}

std::string first_of(const std::unordered_map<std::string, std::string>& row,
                     std::initializer_list<const char*> keys, bool* found = nullptr) {
  for (const char* k : keys) {
    if (const auto it = row.find(k); it != row.end()) {
      if (found) *found = true;
      return it->second;
    }
  }
  if (found) *found = false;
  return {};
}

IndexRow to_row(const std::unordered_map<std::string, std::string>& fields) {
  IndexRow row;
  row.id = first_of(fields, {"id"});
  row.path = first_of(fields, {"path", "audio_path"});
  row.text = first_of(fields, {"text", "sentence"}, &row.has_text);
  row.speaker = first_of(fields, {"speaker_id", "client_id", "speaker"});
  row.gender = first_of(fields, {"gender"});
  return row;
}

std::vector<IndexRow> read_tsv_index(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::MalformedManifest, path.string() + " is empty");
  const auto header = split_tabs(line);
  std::vector<IndexRow> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split_tabs(line);
    std::unordered_map<std::string, std::string> fields;
    for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i) fields[lower_ascii(trim(header[i]))] = cells[i];
    if (first_of(fields, {"path", "audio_path"}).empty()) {
      throw Error(Errc::MalformedManifest, path.string() + ": row without an audio path");
    }
    rows.push_back(to_row(fields));
  }
  return rows;
}

std::vector<IndexRow> read_jsonl_index(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::string line;
  std::vector<IndexRow> rows;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || is_meta_line(line)) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::MalformedManifest, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    std::unordered_map<std::string, std::string> fields;
    for (const auto& [k, v] : j.items()) {
      if (v.is_string()) fields[k] = v.get<std::string>();
    }
    if (first_of(fields, {"path", "audio_path"}).empty()) {
      throw Error(Errc::MalformedManifest, path.string() + ":" + std::to_string(line_no) + ": no audio path");
    }
    rows.push_back(to_row(fields));
  }
  return rows;
}

}  // namespace

std::string_view to_string(Gender g) noexcept {
  switch (g) {
    case Gender::Male: return "male";
    case Gender::Female: return "female";
    case Gender::Unknown: break;
  }
  return "unknown";
}

std::string_view to_string(Subset s) noexcept {
  switch (s) {
    case Subset::Train: return "train";
    case Subset::Valid: return "valid";
    case Subset::Test: return "test";
  }
  return "train";
}

Gender parse_gender(std::string_view text) {
  const auto g = lower_ascii(trim(text));
  if (g == "male" || g == "m" || g == "masculino" || g == "male_masculine") return Gender::Male;
  if (g == "female" || g == "f" || g == "feminino" || g == "female_feminine") return Gender::Female;
  return Gender::Unknown;
}

Subset parse_subset(std::string_view text) {
  const auto s = lower_ascii(trim(text));
  if (s == "train") return Subset::Train;
  if (s == "valid" || s == "dev" || s == "validation") return Subset::Valid;
  if (s == "test") return Subset::Test;
  throw Error(Errc::MalformedManifest, "unknown subset '" + std::string(text) + "'");
}

void Manifest::sort() {
  std::stable_sort(utterances.begin(), utterances.end(),
                   [](const Utterance& a, const Utterance& b) { return a.id < b.id; });
}

Manifest read_manifest(std::istream& in) {
  Manifest m;
  std::string line;
  std::size_t line_no = 0;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::MalformedManifest, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (j.contains("_meta")) {
      m.provenance = j["_meta"].dump();
      continue;
    }
    auto u = from_json(j, line_no);
    if (!ids.insert(u.id).second) throw Error(Errc::DuplicateId, "duplicate id '" + u.id + "'");
    m.utterances.push_back(std::move(u));
  }
  m.sort();
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  auto m = read_manifest(in);
  if (m.provenance.empty()) m.provenance = path.generic_string();
  return m;
}

std::string format_manifest(const Manifest& m, const OutputHeader* header) {
  std::string out;
  if (header) {
    out += header->json_line();
    out += '\n';
  }
  Manifest sorted = m;
  sorted.sort();
  for (const auto& u : sorted.utterances) {
    out += to_json(u).dump();
    out += '\n';
  }
  return out;
}

void save_manifest(const std::filesystem::path& path, const Manifest& m, const OutputHeader* header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << format_manifest(m, header);
}

TranscriptFormat parse_transcript_format(std::string_view text) {
  if (text == "one-file-per-audio") return TranscriptFormat::OneFilePerAudio;
  if (text == "tsv-index") return TranscriptFormat::TsvIndex;
  if (text == "jsonl-index") return TranscriptFormat::JsonlIndex;
  throw Error(Errc::InvalidArgument, "unknown transcript format '" + std::string(text) + "'");
}

BuildResult build_manifest(const std::filesystem::path& root, std::string_view dataset, TranscriptFormat format) {
  if (!std::filesystem::is_directory(root)) throw Error(Errc::Io, root.string() + " is not a directory");
  const auto genders = read_speaker_genders(root);
  BuildResult result;
  result.manifest.provenance = std::string(dataset) + ":" + root.generic_string();

  std::vector<IndexRow> rows;
  if (format == TranscriptFormat::OneFilePerAudio) {
    std::vector<std::filesystem::path> wavs;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
      if (e.is_regular_file() && lower_ascii(e.path().extension().string()) == ".wav") wavs.push_back(e.path());
    }
    std::sort(wavs.begin(), wavs.end());
    for (const auto& wav : wavs) {
      const auto rel = std::filesystem::relative(wav, root);
      IndexRow row;
      row.path = rel.generic_string();
      auto txt = wav;
      txt.replace_extension(".txt");
      row.has_text = std::filesystem::exists(txt);
      if (row.has_text) row.text = read_text_file(txt);
      row.speaker = rel.has_parent_path() ? rel.parent_path().filename().string() : std::string();
      rows.push_back(std::move(row));
    }
  } else if (format == TranscriptFormat::TsvIndex) {
    rows = read_tsv_index(root / "index.tsv");
  } else {
    rows = read_jsonl_index(root / "index.jsonl");
  }

  std::set<std::string> ids;
  for (const auto& row : rows) {
    const auto id = row.id.empty() ? id_from_path(dataset, std::filesystem::path(row.path)) : row.id;
    if (!ids.insert(id).second) throw Error(Errc::DuplicateId, "duplicate id '" + id + "' in " + root.string());
    add_probed(result, root, dataset, genders, row);
  }
  result.manifest.sort();
  return result;
}

}  // namespace asrkit::corpus
