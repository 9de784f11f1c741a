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

#include "asrkit/lm.hpp"
#include "asrkit/random.hpp"

namespace {

using namespace asrkit;

std::vector<textnorm::TokenSequence> corpus(std::size_t sentences, int vocab, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<textnorm::TokenSequence> out;
  for (std::size_t i = 0; i < sentences; ++i) {
    textnorm::TokenSequence s(3 + rng.below(10));
    for (auto& w : s) w = "w" + std::to_string(rng.below(static_cast<std::uint64_t>(vocab)));
    out.push_back(std::move(s));
  }
  return out;
}

void BM_EstimateNgram(benchmark::State& state) {
  const auto text = corpus(static_cast<std::size_t>(state.range(0)), 500, 1);
  for (auto _ : state) benchmark::DoNotOptimize(lm::estimate_ngram(text, 3));
}
BENCHMARK(BM_EstimateNgram)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_ScoreSentence(benchmark::State& state) {
  const auto model = lm::estimate_ngram(corpus(5000, 500, 2), static_cast<int>(state.range(0)));
  const auto probe = corpus(100, 600, 3);
  for (auto _ : state) {
    double total = 0.0;
    for (const auto& s : probe) total += lm::score_sentence(model, s);
    benchmark::DoNotOptimize(total);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(probe.size()));
}
BENCHMARK(BM_ScoreSentence)->Arg(2)->Arg(3)->Arg(4);

void BM_ArpaRoundTrip(benchmark::State& state) {
  const auto model = lm::estimate_ngram(corpus(2000, 300, 4), 3);
  for (auto _ : state) benchmark::DoNotOptimize(lm::parse_arpa(lm::serialize_arpa(model)));
}
BENCHMARK(BM_ArpaRoundTrip)->Unit(benchmark::kMillisecond);

}  // namespace
