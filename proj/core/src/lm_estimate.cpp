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
#include <cmath>
#include <map>
#include <set>

#include "asrkit/error.hpp"
#include "asrkit/lm.hpp"

namespace asrkit::lm {
namespace {

struct HistoryStats {
  std::uint64_t total = 0;     // c(h)
  std::uint64_t distinct = 0;  // T(h)
};

}  // namespace

NgramModel estimate_ngram(std::span<const textnorm::TokenSequence> corpus, int order) {
  if (order < 1 || order > 5) throw Error(Errc::InvalidArgument, "order must be in [1, 5]");
  if (corpus.empty()) throw Error(Errc::EmptyCorpus, "cannot estimate from an empty corpus");

  NgramModel model(order);
  const WordId bos = model.add_word(kSentenceBegin);
  const WordId eos = model.add_word(kSentenceEnd);
  model.add_word(kUnknown);
  {
    std::set<std::string> types;
    for (const auto& s : corpus) types.insert(s.begin(), s.end());
    for (const auto& t : types) model.add_word(t);
  }

  // counts[k-1] maps each observed k-gram (history + predicted word) to its
  // count. Sentences are padded with a single <s>; <s> is never predicted.
  std::vector<std::map<Ngram, std::uint64_t>> counts(static_cast<std::size_t>(order));
  for (const auto& sentence : corpus) {
    Ngram seq{bos};
    for (const auto& t : sentence) seq.push_back(*model.find(t));
    seq.push_back(eos);
    for (std::size_t i = 1; i < seq.size(); ++i) {
      for (int k = 1; k <= order && static_cast<std::size_t>(k) <= i + 1; ++k) {
        const Ngram ngram(seq.begin() + static_cast<std::ptrdiff_t>(i + 1 - static_cast<std::size_t>(k)),
                          seq.begin() + static_cast<std::ptrdiff_t>(i + 1));
        ++counts[static_cast<std::size_t>(k - 1)][ngram];
      }
    }
  }

  // Unigrams, interpolated with the uniform distribution over V.
  std::uint64_t tokens = 0;
  for (const auto& [_, c] : counts[0]) tokens += c;
  const auto observed_types = static_cast<double>(counts[0].size());
  std::set<WordId> vocab;
  for (WordId w = 0; w < static_cast<WordId>(model.words().size()); ++w) {
    if (w != bos) vocab.insert(w);
  }
  const double uniform = 1.0 / static_cast<double>(vocab.size());
  const double denom1 = static_cast<double>(tokens) + observed_types;
  for (WordId w : vocab) {
    const auto it = counts[0].find(Ngram{w});
    const double c = it == counts[0].end() ? 0.0 : static_cast<double>(it->second);
    model.set(Ngram{w}, {std::log10((c + observed_types * uniform) / denom1), 0.0});
  }
  model.set(Ngram{bos}, {kBeginLog10Prob, 0.0});

  for (int k = 2; k <= order; ++k) {
    const auto& table = counts[static_cast<std::size_t>(k - 1)];
    std::map<Ngram, HistoryStats> histories;
    for (const auto& [ngram, c] : table) {
      auto& h = histories[Ngram(ngram.begin(), ngram.end() - 1)];
      h.total += c;
      h.distinct += 1;
    }
    std::vector<std::pair<Ngram, double>> fresh;
    fresh.reserve(table.size());
    for (const auto& [ngram, c] : table) {
      const Ngram history(ngram.begin(), ngram.end() - 1);
      const Ngram shorter(history.begin() + 1, history.end());
      const auto& hs = histories.at(history);
      // The model so far reproduces the interpolated lower-order distribution.
      const double lower = std::pow(10.0, score_word(model, shorter, ngram.back()));
      const double p = (static_cast<double>(c) + static_cast<double>(hs.distinct) * lower) /
                       static_cast<double>(hs.total + hs.distinct);
      fresh.emplace_back(ngram, p);
    }
    for (const auto& [ngram, p] : fresh) model.set(ngram, {std::log10(p), 0.0});
    for (const auto& [history, hs] : histories) {
      NgramEntry entry = *model.lookup(history);
      entry.log10_backoff = std::log10(static_cast<double>(hs.distinct) /
                                       static_cast<double>(hs.total + hs.distinct));
      model.set(history, entry);
    }
  }
  model.check_prefixes();
  return model;
}

}  // namespace asrkit::lm
