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

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "asrkit/provenance.hpp"

namespace asrkit::corpus {

enum class Gender { Male, Female, Unknown };
enum class Subset { Train, Valid, Test };

std::string_view to_string(Gender g) noexcept;
std::string_view to_string(Subset s) noexcept;
/// Accepts "male"/"m"/"masculino"/"male_masculine" and the female
/// equivalents; anything else is Unknown.
Gender parse_gender(std::string_view text);
Subset parse_subset(std::string_view text);

struct Utterance {
  std::string id;
  std::string audio_path;
  double duration_sec = 0.0;
  std::string speaker_id;
  Gender gender = Gender::Unknown;
  std::string text;
  std::string dataset;
  Subset subset = Subset::Train;

  bool operator==(const Utterance&) const = default;
};

struct Manifest {
  std::vector<Utterance> utterances;
  std::string provenance;

  /// Sorts by id; every transform leaves manifests in this order.
  void sort();
  std::size_t size() const noexcept { return utterances.size(); }
  bool empty() const noexcept { return utterances.empty(); }
};

// JSON-lines persistence, one Utterance object per line sorted by id. A
// leading {"_meta": ...} record is optional on read.
Manifest read_manifest(std::istream& in);
Manifest load_manifest(const std::filesystem::path& path);
std::string format_manifest(const Manifest& m, const OutputHeader* header = nullptr);
void save_manifest(const std::filesystem::path& path, const Manifest& m, const OutputHeader* header = nullptr);

enum class TranscriptFormat { OneFilePerAudio, TsvIndex, JsonlIndex };
TranscriptFormat parse_transcript_format(std::string_view text);

struct BuildResult {
  Manifest manifest;
  std::vector<std::string> missing_transcript;  // audio paths without text
  std::vector<std::string> missing_audio;       // index rows naming absent files
  std::vector<std::string> unreadable_audio;    // files that fail header probing
};

/// Layouts:
///  - one-file-per-audio: every *.wav under root with a sibling *.txt;
///    speaker = parent directory name.
///  - tsv-index: root/index.tsv with a header naming at least a path column
///    (path|audio_path) and a text column (text|sentence); optional id,
///    speaker_id|client_id and gender columns.
///  - jsonl-index: root/index.jsonl with the same keys.
/// An optional root/speakers.tsv ("speaker<TAB>gender") supplies genders.
/// Throws DuplicateId when an index repeats an id.
BuildResult build_manifest(const std::filesystem::path& root, std::string_view dataset, TranscriptFormat format);

/// Removes utterances whose normalized text is empty.
std::pair<Manifest, std::size_t> drop_empty(Manifest m);

/// Removes utterances strictly longer than `max_seconds`.
std::pair<Manifest, std::size_t> drop_too_long(Manifest m, double max_seconds = 30.0);

struct SpeakerSplit {
  Manifest train;
  Manifest test;
};

/// Moves every utterance of ceil(frac * speakers) male and female speakers
/// to test. Speakers are chosen by a seeded Fisher-Yates shuffle of the
/// sorted speaker ids; unknown-gender speakers stay in train.
SpeakerSplit split_by_speaker(const Manifest& m, double male_frac, double female_frac, std::uint64_t seed);

/// Validated utterances whose speaker and normalized sentence both avoid the
/// dev and test sets, tagged as train.
Manifest augment_common_voice(const Manifest& validated, const Manifest& dev, const Manifest& test);

/// Drops training utterances whose normalized sentence occurs in any test set.
std::pair<Manifest, std::size_t> filter_test_leakage(Manifest train, std::span<const Manifest> tests);

struct DroppedCounts {
  std::size_t empty_text = 0;
  std::size_t missing_audio = 0;
  std::size_t too_long = 0;
  std::size_t leakage = 0;
};

struct SplitReport {
  /// dataset -> hours per subset (train, valid, test), exact.
  std::map<std::string, std::array<double, 3>> hours;
  DroppedCounts dropped;

  std::array<double, 3> totals() const;
  std::string to_json() const;
  std::string to_table() const;
};

/// Hours per (dataset, subset) from each utterance's own tags.
SplitReport summarize(std::span<const Manifest> manifests, DroppedCounts dropped = {});

}  // namespace asrkit::corpus
