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

#include <cmath>

#include "asrkit/audio.hpp"

namespace {

using namespace asrkit;

void BM_Resample(benchmark::State& state) {
  audio::AudioClip clip;
  clip.sample_rate_hz = static_cast<int>(state.range(0));
  clip.samples.resize(static_cast<std::size_t>(clip.sample_rate_hz));  // one second
  for (std::size_t n = 0; n < clip.samples.size(); ++n) clip.samples[n] = std::sin(0.05 * static_cast<double>(n));
  for (auto _ : state) benchmark::DoNotOptimize(audio::resample(clip, audio::kModelSampleRate));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(clip.samples.size()));
}
BENCHMARK(BM_Resample)->Arg(8000)->Arg(22050)->Arg(44100)->Arg(48000)->Unit(benchmark::kMillisecond);

void BM_DecodeWav(benchmark::State& state) {
  audio::AudioClip clip;
  clip.samples.assign(16000 * 10, 0.25);
  const auto bytes = audio::encode_wav(clip);
  for (auto _ : state) benchmark::DoNotOptimize(audio::decode_wav(bytes));
}
BENCHMARK(BM_DecodeWav)->Unit(benchmark::kMillisecond);

}  // namespace
