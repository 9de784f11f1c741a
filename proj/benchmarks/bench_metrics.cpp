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

#include "asrkit/metrics.hpp"
#include "asrkit/random.hpp"

namespace {

using namespace asrkit;

void BM_EditDistance(benchmark::State& state) {
  Rng rng(7);
  std::vector<int> a(static_cast<std::size_t>(state.range(0))), b(a.size());
  for (auto& x : a) x = static_cast<int>(rng.below(50));
  for (auto& x : b) x = static_cast<int>(rng.below(50));
  for (auto _ : state) benchmark::DoNotOptimize(metrics::edit_distance(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_EditDistance)->RangeMultiplier(4)->Range(16, 1024)->Complexity(benchmark::oNSquared);

void BM_Cer(benchmark::State& state) {
  const std::string ref = "o rato roeu a roupa do rei de roma e a rainha com raiva resolveu remendar";
  const std::string hyp = "o rato roeu roupa do rei de roma a rainha com raiva resolveu remendá la";
  for (auto _ : state) benchmark::DoNotOptimize(metrics::cer(ref, hyp));
}
BENCHMARK(BM_Cer);

}  // namespace
