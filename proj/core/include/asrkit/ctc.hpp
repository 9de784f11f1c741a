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

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "asrkit/lm.hpp"
#include "asrkit/matrix.hpp"
#include "asrkit/textnorm.hpp"

namespace asrkit::ctc {

inline constexpr std::string_view kBlank = "<blank>";
inline constexpr std::string_view kWordDelimiter = "|";

/// Symbol indices into a Vocabulary; never contains the blank.
using LabelSequence = std::vector<int>;

/// Character inventory of the acoustic model. Exactly one blank and one
/// word delimiter.
class Vocabulary {
 public:
  explicit Vocabulary(std::vector<std::string> symbols);

  /// <blank>, |, then the normalizer's character inventory.
  static Vocabulary portuguese();

  std::size_t size() const noexcept { return symbols_.size(); }
  int blank() const noexcept { return blank_; }
  int delimiter() const noexcept { return delimiter_; }
  const std::string& symbol(int index) const { return symbols_.at(static_cast<std::size_t>(index)); }
  const std::vector<std::string>& symbols() const noexcept { return symbols_; }
  std::optional<int> index(std::string_view symbol) const;

  /// Words spelled character by character, joined by the delimiter.
  /// Throws LabelOutOfVocab for characters without a symbol.
  LabelSequence encode(const textnorm::TokenSequence& words) const;

  /// Splits on the delimiter; empty words are dropped.
  textnorm::TokenSequence words(const LabelSequence& labels) const;
  std::string text(const LabelSequence& labels) const { return textnorm::join(words(labels)); }

  bool operator==(const Vocabulary& other) const { return symbols_ == other.symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> index_;
  int blank_ = -1;
  int delimiter_ = -1;
};

Vocabulary read_vocabulary(std::istream& in);
Vocabulary load_vocabulary(const std::filesystem::path& path);
void save_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab);

/// T x V natural-log probabilities; every row log-sum-exps to zero.
struct LogProbLattice {
  Matrix frames;
  Vocabulary vocab;

  Eigen::Index num_frames() const noexcept { return frames.rows(); }

  /// Throws MalformedLattice if the width disagrees with the vocabulary or a
  /// row is not normalized within `tolerance`.
  void validate(double tolerance = 1e-6) const;
};

/// Row-wise log-softmax of raw scores.
LogProbLattice lattice_from_logits(const Matrix& logits, Vocabulary vocab);

/// Text interchange: "T V" then T rows of V values.
LogProbLattice read_lattice(std::istream& in, const Vocabulary& vocab);
LogProbLattice load_lattice(const std::filesystem::path& path, const Vocabulary& vocab);
std::string format_lattice(const LogProbLattice& lattice);
void save_lattice(const std::filesystem::path& path, const LogProbLattice& lattice);

/// Negative log-likelihood of `target` summed over all alignments. Returns
/// +infinity when the target needs more frames than the lattice has.
double ctc_loss(const LogProbLattice& lattice, const LabelSequence& target);

struct LossGradient {
  double loss = 0.0;
  Matrix gradient;  // d loss / d logits, where frames = log_softmax(logits)
};

/// Forward-backward. The gradient row for frame t is softmax - posterior.
/// Throws InfeasibleTarget when the loss is infinite.
LossGradient ctc_loss_and_gradient(const LogProbLattice& lattice, const LabelSequence& target);
Matrix ctc_gradient(const LogProbLattice& lattice, const LabelSequence& target);

/// Best path: per-frame argmax (lowest index wins ties), repeats collapsed,
/// blanks removed.
LabelSequence greedy_decode(const LogProbLattice& lattice);

struct BeamOptions {
  int width = 100;
  double alpha = 2.0;   // LM weight
  double beta = -0.3;   // per-word bonus
};

struct Hypothesis {
  LabelSequence labels;
  double fused_score = 0.0;     // acoustic + lm
  double acoustic_score = 0.0;  // ln P_ctc(labels)
  double lm_score = 0.0;        // alpha * ln P_lm + beta * words
};

/// Prefix beam search with shallow fusion at word boundaries:
///
///   fused = ln P_ctc + alpha * ln(10) * log10 P_lm(word | history) + beta
///
/// accumulated every time the delimiter closes a non-empty word, plus the
/// final unterminated word and </s> at the end of the lattice. Without an LM
/// no fusion terms are added at all. Results are ranked by fused score,
/// ties broken by lexicographically smaller labels.
std::vector<Hypothesis> prefix_beam_search(const LogProbLattice& lattice, const BeamOptions& options,
                                           const lm::NgramModel* lm = nullptr);

/// Top hypothesis of every lattice, decoded on `threads` workers.
std::vector<LabelSequence> decode_all(std::span<const LogProbLattice> lattices, const BeamOptions& options,
                                      const lm::NgramModel* lm = nullptr, int threads = 1);

struct FusionPoint {
  double alpha = 0.0;
  double beta = 0.0;
  double wer = 0.0;
};

struct FusionSearch {
  FusionPoint best;
  std::vector<FusionPoint> grid;  // alpha-major, in the order given
};

/// Pooled WER of fused beam search for every (alpha, beta) pair against
/// normalized references. The lowest WER wins; ties keep the earlier point.
FusionSearch tune_fusion(std::span<const LogProbLattice> lattices, std::span<const textnorm::TokenSequence> refs,
                         const lm::NgramModel& lm, std::span<const double> alphas, std::span<const double> betas,
                         int width, int threads = 1);

}  // namespace asrkit::ctc
