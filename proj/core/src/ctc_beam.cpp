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
#include <unordered_map>

#include "asrkit/ctc.hpp"
#include "asrkit/error.hpp"

namespace asrkit::ctc {
namespace {

constexpr double kLn10 = 2.302585092994045684;

struct LabelHash {
  std::size_t operator()(const LabelSequence& labels) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (int l : labels) {
      h ^= static_cast<std::uint32_t>(l);
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

struct Beam {
  double log_p_blank = kLogZero;
  double log_p_nonblank = kLogZero;
  double lm_score = 0.0;              // accumulated fusion terms
  std::vector<lm::WordId> lm_history;  // last order-1 words, oldest first

  double total() const { return logaddexp(log_p_blank, log_p_nonblank); }
};

using BeamSet = std::unordered_map<LabelSequence, Beam, LabelHash>;

class Fusion {
 public:
  Fusion(const BeamOptions& options, const lm::NgramModel* model) : options_(options), model_(model) {}

  bool active() const { return model_ != nullptr; }

  std::vector<lm::WordId> initial_history() const {
    if (!model_) return {};
    return {model_->id_or_unk(lm::kSentenceBegin)};
  }

  // Fusion term for `word` following `history`; appends the word to it.
  double word_term(std::vector<lm::WordId>& history, std::string_view word) const {
    double term = options_.beta;
    if (options_.alpha != 0.0) {
      const lm::WordId id = model_->id_or_unk(word);
      term += options_.alpha * kLn10 * lm::score_word(*model_, history, id);
      push(history, id);
    }
    return term;
  }

  double end_term(const std::vector<lm::WordId>& history) const {
    if (options_.alpha == 0.0) return 0.0;
    return options_.alpha * kLn10 *
           lm::score_word(*model_, history, model_->id_or_unk(lm::kSentenceEnd));
  }

 private:
  void push(std::vector<lm::WordId>& history, lm::WordId id) const {
    history.push_back(id);
    const auto keep = static_cast<std::size_t>(std::max(model_->order() - 1, 0));
    if (history.size() > keep) history.erase(history.begin(), history.end() - static_cast<std::ptrdiff_t>(keep));
  }

  const BeamOptions& options_;
  const lm::NgramModel* model_;
};

// Characters of the word still open at the end of `labels`.
std::string trailing_word(const Vocabulary& vocab, const LabelSequence& labels) {
  auto it = labels.end();
  while (it != labels.begin() && *(it - 1) != vocab.delimiter()) --it;
  std::string word;
  for (; it != labels.end(); ++it) word += vocab.symbol(*it);
  return word;
}

bool ranks_before(double score_a, const LabelSequence& a, double score_b, const LabelSequence& b) {
  if (score_a != score_b) return score_a > score_b;
  return a < b;
}

}  // namespace

std::vector<Hypothesis> prefix_beam_search(const LogProbLattice& lattice, const BeamOptions& options,
                                           const lm::NgramModel* model) {
  if (options.width < 1) throw Error(Errc::InvalidArgument, "beam width must be >= 1");
  if (model && options.alpha < 0.0) throw Error(Errc::InvalidArgument, "alpha must be >= 0");
  const Vocabulary& vocab = lattice.vocab;
  if (lattice.frames.cols() != static_cast<Eigen::Index>(vocab.size())) {
    throw Error(Errc::MalformedLattice, "lattice width differs from vocabulary size");
  }
  const Fusion fusion(options, model);
  const int blank = vocab.blank();
  const int delim = vocab.delimiter();
  const auto V = static_cast<int>(vocab.size());

  std::vector<std::pair<LabelSequence, Beam>> beam;
  {
    Beam root;
    root.log_p_blank = 0.0;
    root.lm_history = fusion.initial_history();
    beam.emplace_back(LabelSequence{}, std::move(root));
  }

  for (Eigen::Index t = 0; t < lattice.frames.rows(); ++t) {
    const auto lp = lattice.frames.row(t);
    BeamSet next;
    next.reserve(beam.size() * static_cast<std::size_t>(V));

    // Entries created here inherit LM state from the prefix they extend.
    auto slot = [&](const LabelSequence& prefix, const Beam& parent, int symbol) -> Beam& {
      auto [it, inserted] = next.try_emplace(prefix);
      if (inserted) {
        it->second.lm_score = parent.lm_score;
        it->second.lm_history = parent.lm_history;
        if (symbol == delim && fusion.active()) {
          LabelSequence body(prefix.begin(), prefix.end() - 1);
          const std::string word = trailing_word(vocab, body);
          if (!word.empty()) it->second.lm_score += fusion.word_term(it->second.lm_history, word);
        }
      }
      return it->second;
    };

    for (const auto& [prefix, hyp] : beam) {
      const double total = hyp.total();
      // Blank keeps the prefix.
      {
        Beam& same = slot(prefix, hyp, -1);
        same.log_p_blank = logaddexp(same.log_p_blank, total + lp(blank));
      }
      const int last = prefix.empty() ? -1 : prefix.back();
      for (int s = 0; s < V; ++s) {
        if (s == blank) continue;
        const double p = lp(s);
        if (p == kLogZero) continue;
        LabelSequence extended = prefix;
        extended.push_back(s);
        if (s == last) {
          // A repeat only extends the prefix across a blank; otherwise it
          // collapses into the existing final symbol.
          Beam& grown = slot(extended, hyp, s);
          grown.log_p_nonblank = logaddexp(grown.log_p_nonblank, hyp.log_p_blank + p);
          Beam& same = slot(prefix, hyp, -1);
          same.log_p_nonblank = logaddexp(same.log_p_nonblank, hyp.log_p_nonblank + p);
        } else {
          Beam& grown = slot(extended, hyp, s);
          grown.log_p_nonblank = logaddexp(grown.log_p_nonblank, total + p);
        }
      }
    }

    std::vector<std::pair<LabelSequence, Beam>> ranked;
    ranked.reserve(next.size());
    for (auto& [prefix, b] : next) {
      if (b.total() == kLogZero) continue;
      ranked.emplace_back(prefix, std::move(b));
    }
    const auto keep = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(options.width));
    auto better = [](const auto& a, const auto& b) {
      return ranks_before(a.second.total() + a.second.lm_score, a.first, b.second.total() + b.second.lm_score,
                          b.first);
    };
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end(), better);
    ranked.resize(keep);
    beam = std::move(ranked);
  }

  std::vector<Hypothesis> results;
  results.reserve(beam.size());
  for (auto& [prefix, b] : beam) {
    Hypothesis h;
    h.labels = prefix;
    h.acoustic_score = b.total();
    h.lm_score = b.lm_score;
    if (fusion.active()) {
      auto history = b.lm_history;
      const std::string word = trailing_word(vocab, prefix);
      if (!word.empty()) h.lm_score += fusion.word_term(history, word);
      h.lm_score += fusion.end_term(history);
    }
    h.fused_score = h.acoustic_score + h.lm_score;
    results.push_back(std::move(h));
  }
  std::sort(results.begin(), results.end(), [](const Hypothesis& a, const Hypothesis& b) {
    return ranks_before(a.fused_score, a.labels, b.fused_score, b.labels);
  });
  return results;
}

}  // namespace asrkit::ctc
