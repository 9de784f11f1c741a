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


#include <benchmark/benchmark.h>

#include "asrkit/ctc.hpp"
#include "asrkit/random.hpp"

namespace {

using namespace asrkit;

ctc::LogProbLattice random_lattice(int frames, std::uint64_t seed) {
  const auto vocab = ctc::Vocabulary::portuguese();
  Rng rng(seed);
  Matrix logits(frames, static_cast<Eigen::Index>(vocab.size()));
  for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data()[i] = 4.0 * rng.uniform();
  return ctc::lattice_from_logits(logits, vocab);
}

ctc::LabelSequence target_of(const ctc::Vocabulary& v, int words) {
  textnorm::TokenSequence ws;
  for (int i = 0; i < words; ++i) ws.push_back(i % 2 ? "casa" : "verde");
  return v.encode(ws);
}

void BM_CtcLoss(benchmark::State& state) {
  const auto lat = random_lattice(static_cast<int>(state.range(0)), 1);
  const auto target = target_of(lat.vocab, static_cast<int>(state.range(0) / 25));
  for (auto _ : state) benchmark::DoNotOptimize(ctc::ctc_loss(lat, target));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CtcLoss)->Arg(100)->Arg(400)->Arg(1600);

void BM_CtcLossAndGradient(benchmark::State& state) {
  const auto lat = random_lattice(static_cast<int>(state.range(0)), 2);
  const auto target = target_of(lat.vocab, static_cast<int>(state.range(0) / 25));
  for (auto _ : state) benchmark::DoNotOptimize(ctc::ctc_loss_and_gradient(lat, target).loss);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CtcLossAndGradient)->Arg(100)->Arg(400)->Arg(1600);

void BM_GreedyDecode(benchmark::State& state) {
  const auto lat = random_lattice(static_cast<int>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(ctc::greedy_decode(lat));
}
BENCHMARK(BM_GreedyDecode)->Arg(400);

void BM_PrefixBeamSearch(benchmark::State& state) {
  const auto lat = random_lattice(200, 4);
  ctc::BeamOptions opt;
  opt.width = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(ctc::prefix_beam_search(lat, opt));
}
BENCHMARK(BM_PrefixBeamSearch)->Arg(1)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace
