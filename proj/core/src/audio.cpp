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

#include "asrkit/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <optional>

#include "asrkit/error.hpp"

namespace asrkit::audio {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

struct FmtChunk {
  int channels = 0;
  int sample_rate = 0;
};

FmtChunk parse_fmt(const std::uint8_t* p, std::uint32_t size) {
  if (size < 16) throw Error(Errc::MalformedHeader, "fmt chunk shorter than 16 bytes");
  std::uint16_t format = read_u16(p);
  const std::uint16_t channels = read_u16(p + 2);
  const std::uint32_t rate = read_u32(p + 4);
  const std::uint16_t bits = read_u16(p + 14);
  if (format == kFormatExtensible) {
    if (size < 40) throw Error(Errc::MalformedHeader, "truncated WAVE_FORMAT_EXTENSIBLE fmt chunk");
    format = read_u16(p + 24);  // first two bytes of the sub-format GUID
  }
  if (format != kFormatPcm) {
    throw Error(Errc::UnsupportedEncoding, "format tag " + std::to_string(format) + " is not PCM");
  }
  if (bits != 16) {
    throw Error(Errc::UnsupportedEncoding, std::to_string(bits) + "-bit PCM is not supported");
  }
  if (channels == 0 || rate == 0) {
    throw Error(Errc::MalformedHeader, "zero channels or zero sample rate");
  }
  return {channels, static_cast<int>(rate)};
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Layout {
  FmtChunk fmt;
  std::size_t data_offset = 0;
  std::uint32_t data_size = 0;
};

// Walks the RIFF chunk list up to the data chunk.
Layout scan(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error(Errc::MalformedHeader, "missing RIFF/WAVE signature");
  }
  std::optional<FmtChunk> fmt;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (body + size > bytes.size()) throw Error(Errc::MalformedHeader, "fmt chunk runs past end of file");
      fmt = parse_fmt(bytes.data() + body, size);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!fmt) throw Error(Errc::MalformedHeader, "data chunk precedes fmt chunk");
      if (body + size > bytes.size()) {
        throw Error(Errc::TruncatedData, "data chunk declares " + std::to_string(size) + " bytes but only " +
                                             std::to_string(bytes.size() - body) + " are present");
      }
      return {*fmt, body, size};
    }
    pos = body + size + (size & 1u);
  }
  throw Error(Errc::MalformedHeader, fmt ? "no data chunk" : "no fmt chunk");
}

double kaiser(double x, double beta) {
  // x in [-1, 1]
  const double r = std::max(0.0, 1.0 - x * x);
  return std::cyl_bessel_i(0.0, beta * std::sqrt(r)) / std::cyl_bessel_i(0.0, beta);
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = M_PI * x;
  return std::sin(px) / px;
}

constexpr int kTaps = 64;
constexpr int kHalfTaps = kTaps / 2;
constexpr double kKaiserBeta = 8.6;

}  // namespace

AudioClip decode_wav(std::span<const std::uint8_t> bytes) {
  const Layout layout = scan(bytes);
  const int channels = layout.fmt.channels;
  const std::size_t frames = layout.data_size / (2u * static_cast<std::size_t>(channels));
  AudioClip clip;
  clip.sample_rate_hz = layout.fmt.sample_rate;
  clip.samples.resize(frames);
  const std::uint8_t* p = bytes.data() + layout.data_offset;
  for (std::size_t i = 0; i < frames; ++i) {
    double sum = 0.0;
    for (int c = 0; c < channels; ++c) {
      const auto v = static_cast<std::int16_t>(read_u16(p));
      sum += static_cast<double>(v) / 32768.0;
      p += 2;
    }
    clip.samples[i] = channels == 1 ? sum : sum / channels;
  }
  return clip;
}

AudioClip load_wav(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return decode_wav(bytes);
}

WavInfo probe_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  const auto file_size = static_cast<std::size_t>(std::filesystem::file_size(path));
  std::uint8_t head[12];
  if (!in.read(reinterpret_cast<char*>(head), 12) || std::memcmp(head, "RIFF", 4) != 0 ||
      std::memcmp(head + 8, "WAVE", 4) != 0) {
    throw Error(Errc::MalformedHeader, "missing RIFF/WAVE signature in " + path.string());
  }
  std::optional<FmtChunk> fmt;
  std::size_t pos = 12;
  while (pos + 8 <= file_size) {
    std::uint8_t chunk[8];
    in.seekg(static_cast<std::streamoff>(pos));
    if (!in.read(reinterpret_cast<char*>(chunk), 8)) break;
    const std::uint32_t size = read_u32(chunk + 4);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      std::vector<std::uint8_t> body(size);
      if (!in.read(reinterpret_cast<char*>(body.data()), size)) {
        throw Error(Errc::MalformedHeader, "fmt chunk runs past end of " + path.string());
      }
      fmt = parse_fmt(body.data(), size);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!fmt) throw Error(Errc::MalformedHeader, "data chunk precedes fmt chunk in " + path.string());
      if (pos + 8 + size > file_size) throw Error(Errc::TruncatedData, "data chunk truncated in " + path.string());
      return {fmt->sample_rate, fmt->channels, size / (2u * static_cast<std::uint64_t>(fmt->channels))};
    }
    pos += 8 + size + (size & 1u);
  }
  throw Error(Errc::MalformedHeader, "no data chunk in " + path.string());
}

std::vector<std::uint8_t> encode_wav(const AudioClip& clip) {
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate_hz) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (double s : clip.samples) {
    const double scaled = std::nearbyint(s * 32768.0);
    const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    put_u16(out, static_cast<std::uint16_t>(v));
  }
  return out;
}

void save_wav(const std::filesystem::path& path, const AudioClip& clip) {
  const auto bytes = encode_wav(clip);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

AudioClip resample(const AudioClip& clip, int target_rate_hz) {
  if (target_rate_hz <= 0) throw Error(Errc::InvalidArgument, "target rate must be positive");
  if (clip.sample_rate_hz <= 0) throw Error(Errc::InvalidArgument, "source rate must be positive");
  if (target_rate_hz == clip.sample_rate_hz) return clip;

  const std::int64_t g = std::gcd<std::int64_t>(target_rate_hz, clip.sample_rate_hz);
  const std::int64_t up = target_rate_hz / g;          // L
  const std::int64_t down = clip.sample_rate_hz / g;   // M
  const double cutoff = std::min(1.0, static_cast<double>(up) / static_cast<double>(down));

  // table[phase][j] weights input sample (base - kHalfTaps + 1 + j) for an
  // output located phase/up samples past input sample `base`.
  std::vector<double> table(static_cast<std::size_t>(up) * kTaps);
  for (std::int64_t phase = 0; phase < up; ++phase) {
    const double frac = static_cast<double>(phase) / static_cast<double>(up);
    double* row = table.data() + phase * kTaps;
    double sum = 0.0;
    for (int j = 0; j < kTaps; ++j) {
      const double tau = static_cast<double>(kHalfTaps - 1 - j) + frac;
      row[j] = cutoff * sinc(cutoff * tau) * kaiser(tau / kHalfTaps, kKaiserBeta);
      sum += row[j];
    }
    for (int j = 0; j < kTaps; ++j) row[j] /= sum;
  }

  const auto n_in = static_cast<std::int64_t>(clip.samples.size());
  const std::int64_t n_out = (2 * n_in * up + down) / (2 * down);
  AudioClip out;
  out.sample_rate_hz = target_rate_hz;
  out.samples.resize(static_cast<std::size_t>(n_out));
  for (std::int64_t n = 0; n < n_out; ++n) {
    const std::int64_t pos = n * down;
    const std::int64_t base = pos / up;
    const std::int64_t phase = pos % up;
    const double* row = table.data() + phase * kTaps;
    const std::int64_t first = base - kHalfTaps + 1;
    const std::int64_t lo = std::max<std::int64_t>(0, -first);
    const std::int64_t hi = std::min<std::int64_t>(kTaps, n_in - first);
    double acc = 0.0;
    for (std::int64_t j = lo; j < hi; ++j) acc += row[j] * clip.samples[static_cast<std::size_t>(first + j)];
    out.samples[static_cast<std::size_t>(n)] = acc;
  }
  return out;
}

double duration_seconds(const AudioClip& clip) noexcept {
  if (clip.sample_rate_hz <= 0) return 0.0;
  return static_cast<double>(clip.samples.size()) / static_cast<double>(clip.sample_rate_hz);
}

bool exceeds_max_duration(double duration_sec, double max_seconds) {
  if (!(max_seconds > 0.0)) throw Error(Errc::InvalidArgument, "max_seconds must be positive");
  return duration_sec > max_seconds;
}

bool exceeds_max_duration(const AudioClip& clip, double max_seconds) {
  return exceeds_max_duration(duration_seconds(clip), max_seconds);
}

}  // namespace asrkit::audio
