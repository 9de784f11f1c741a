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
#include <span>
#include <vector>

namespace asrkit::audio {

inline constexpr int kModelSampleRate = 16000;
inline constexpr double kDefaultMaxSeconds = 30.0;

/// Mono clip. Samples are in [-1, 1]; PCM16 decodes as value / 32768.
struct AudioClip {
  std::vector<double> samples;
  int sample_rate_hz = kModelSampleRate;
};

/// Header facts needed to fill a manifest without decoding samples.
struct WavInfo {
  int sample_rate_hz = 0;
  int channels = 0;
  std::uint64_t frames = 0;  // samples per channel
};

/// Reads RIFF/WAVE PCM16 little-endian. Multi-channel audio is mixed down by
/// arithmetic mean. Chunks other than fmt and data are skipped.
AudioClip load_wav(const std::filesystem::path& path);
AudioClip decode_wav(std::span<const std::uint8_t> bytes);

WavInfo probe_wav(const std::filesystem::path& path);

/// Canonical 44-byte header plus data chunk. Samples are scaled by 32768,
/// rounded to nearest and clamped to the int16 range.
std::vector<std::uint8_t> encode_wav(const AudioClip& clip);
void save_wav(const std::filesystem::path& path, const AudioClip& clip);

/// Kaiser-windowed sinc polyphase resampler (beta 8.6, 64 taps per phase).
/// Output length is round(n * target / source). Identity when rates match.
AudioClip resample(const AudioClip& clip, int target_rate_hz);

double duration_seconds(const AudioClip& clip) noexcept;

/// Strictly greater: a clip of exactly `max_seconds` is kept.
bool exceeds_max_duration(const AudioClip& clip,
                          double max_seconds = kDefaultMaxSeconds);
bool exceeds_max_duration(double duration_sec,
                          double max_seconds = kDefaultMaxSeconds);

}  // namespace asrkit::audio
