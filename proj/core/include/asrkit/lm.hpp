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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "asrkit/textnorm.hpp"

// Backoff n-gram language models in ARPA form. All probabilities in this
// module are log10.
namespace asrkit::lm {

inline constexpr std::string_view kSentenceBegin = "<s>";
inline constexpr std::string_view kSentenceEnd = "</s>";
inline constexpr std::string_view kUnknown = "<unk>";

/// log10 probability conventionally assigned to <s>, which is never predicted.
inline constexpr double kBeginLog10Prob = -99.0;

using WordId = std::int32_t;
using Ngram = std::vector<WordId>;

struct NgramEntry {
  double log10_prob = 0.0;
  double log10_backoff = 0.0;  // unused at the highest order
};

struct NgramHash {
  std::size_t operator()(const Ngram& ngram) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (WordId w : ngram) {
      h ^= static_cast<std::uint32_t>(w);
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

using NgramTable = std::unordered_map<Ngram, NgramEntry, NgramHash>;

class NgramModel {
 public:
  explicit NgramModel(int order);

  int order() const noexcept { return order_; }

  const std::vector<std::string>& words() const noexcept { return words_; }
  std::optional<WordId> find(std::string_view word) const;
  WordId add_word(std::string_view word);

  /// Maps an out-of-vocabulary word to <unk>; throws NoUnkToken when the
  /// model declares no unknown marker.
  WordId id_or_unk(std::string_view word) const;

  std::optional<WordId> unk() const noexcept { return unk_; }
  std::optional<WordId> sentence_begin() const noexcept { return find(kSentenceBegin); }
  std::optional<WordId> sentence_end() const noexcept { return find(kSentenceEnd); }

  /// tables(k) holds k-grams, 1 <= k <= order.
  const NgramTable& table(int k) const { return tables_.at(static_cast<std::size_t>(k - 1)); }
  const NgramEntry* lookup(const Ngram& ngram) const;
  void set(const Ngram& ngram, NgramEntry entry);

  /// Checks that every k-gram's (k-1)-token prefix is listed.
  void check_prefixes() const;

 private:
  int order_;
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> index_;
  std::optional<WordId> unk_;
  std::vector<NgramTable> tables_;
};

NgramModel parse_arpa(std::istream& in);
NgramModel parse_arpa(std::string_view text);
NgramModel load_arpa(const std::filesystem::path& path);

/// Bit-exact ARPA text: n-grams sorted by token strings, tab-separated
/// fields, values printed with 7 significant digits. `preamble` lines are
/// emitted before \data\ (ARPA readers ignore them).
std::string serialize_arpa(const NgramModel& model, std::span<const std::string> preamble = {});
void save_arpa(const std::filesystem::path& path, const NgramModel& model,
               std::span<const std::string> preamble = {});

/// Backoff recursion. Only the last order-1 history tokens are consulted.
double score_word(const NgramModel& model, std::span<const WordId> history, WordId word);
double score_word(const NgramModel& model, std::span<const std::string> history, std::string_view word);

/// Sum of score_word over tokens with <s> prepended and </s> scored last.
double score_sentence(const NgramModel& model, const textnorm::TokenSequence& tokens);

/// 10^(-total / events); events count every token plus one </s> per sentence.
double perplexity(const NgramModel& model, std::span<const textnorm::TokenSequence> corpus);

/// Interpolated Witten-Bell estimate stored in backoff form.
///
/// Vocabulary V is every corpus token plus </s> and <unk>. With N tokens
/// (including one </s> per sentence) and T distinct observed types:
///
///   P(w)     = (c(w) + T / |V|) / (N + T)
///   P(w | h) = (c(h w) + T(h) * P(w | h')) / (c(h) + T(h))
///
/// where c(h) sums continuations of h, T(h) counts distinct continuations
/// and h' drops the oldest token. Listed k-grams are the observed ones; the
/// backoff weight of h is (1 - sum_seen P(w|h)) / (1 - sum_seen P(w|h')),
/// which reduces to T(h) / (c(h) + T(h)).
NgramModel estimate_ngram(std::span<const textnorm::TokenSequence> corpus, int order);

}  // namespace asrkit::lm
