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


#include "asrkit/ctc.hpp"
#include "asrkit/error.hpp"
#include "asrkit/metrics.hpp"
#include "asrkit/parallel.hpp"

namespace asrkit::ctc {

std::vector<LabelSequence> decode_all(std::span<const LogProbLattice> lattices, const BeamOptions& options,
                                      const lm::NgramModel* lm, int threads) {
  std::vector<LabelSequence> out(lattices.size());
  parallel_for(lattices.size(), threads, [&](std::size_t i) {
    const auto hyps = prefix_beam_search(lattices[i], options, lm);
    if (!hyps.empty()) out[i] = hyps.front().labels;
  });
  return out;
}

FusionSearch tune_fusion(std::span<const LogProbLattice> lattices, std::span<const textnorm::TokenSequence> refs,
                         const lm::NgramModel& lm, std::span<const double> alphas, std::span<const double> betas,
                         int width, int threads) {
  if (lattices.size() != refs.size()) throw Error(Errc::InvalidArgument, "lattice and reference counts differ");
  if (alphas.empty() || betas.empty()) throw Error(Errc::InvalidArgument, "empty alpha or beta grid");
  FusionSearch search;
  bool first = true;
  for (double alpha : alphas) {
    for (double beta : betas) {
      const BeamOptions options{width, alpha, beta};
      const auto best = decode_all(lattices, options, &lm, threads);
      std::vector<metrics::RefHyp> pairs;
      pairs.reserve(best.size());
      for (std::size_t i = 0; i < best.size(); ++i) {
        pairs.push_back({refs[i], lattices[i].vocab.words(best[i])});
      }
      const FusionPoint point{alpha, beta, metrics::corpus_wer(pairs)};
      search.grid.push_back(point);
      if (first || point.wer < search.best.wer) search.best = point;
      first = false;
    }
  }
  return search;
}

}  // namespace asrkit::ctc
