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

#include <algorithm>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "asrkit/textnorm.hpp"

namespace asrkit::metrics {

/// Levenshtein distance with unit costs, two-row DP.
template <typename T>
std::size_t edit_distance(std::span<const T> a, std::span<const T> b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

template <typename T>
std::size_t edit_distance(const std::vector<T>& a, const std::vector<T>& b) {
  return edit_distance(std::span<const T>(a), std::span<const T>(b));
}

/// Word error rate; may exceed 1. Throws EmptyReference.
double wer(const textnorm::TokenSequence& ref, const textnorm::TokenSequence& hyp);

/// Character error rate over UTF-8 code points, spaces included. The
/// reference must contain something other than spaces.
double cer(std::string_view ref, std::string_view hyp);

struct RefHyp {
  textnorm::TokenSequence ref;
  textnorm::TokenSequence hyp;
};

/// Pooled: total edits over total reference words.
double corpus_wer(std::span<const RefHyp> pairs);

/// Unweighted mean of subset WERs.
double macro_average(std::span<const double> subset_wers);

/// Half-up rounding for display ("0.1245" -> "0.125").
double round_half_up(double value, int decimals);

struct SubsetScore {
  double wer = 0.0;
  double cer = 0.0;
  std::size_t utterances = 0;
  std::size_t ref_words = 0;
};

struct EvalReport {
  std::map<std::string, SubsetScore> per_subset;
  double average = 0.0;
};

/// One scored utterance: raw reference and hypothesis text plus its subset.
struct ScoredPair {
  std::string subset;
  std::string ref_text;
  std::string hyp_text;
};

/// Normalizes both sides, pools WER/CER within each subset and macro-averages
/// WER across subsets.
EvalReport evaluate(std::span<const ScoredPair> pairs);

/// Display name for a dataset tag ("cetuc" -> "CETUC", "voxforge" -> "VF").
std::string subset_display_name(std::string_view tag);

/// Subsets ordered CETUC, CV, LaPS, MLS, SID, TEDx, VF, then others by name.
std::vector<std::string> table_order(const EvalReport& report);

std::string report_to_json(const EvalReport& report);
std::string report_to_table(const EvalReport& report);

}  // namespace asrkit::metrics
