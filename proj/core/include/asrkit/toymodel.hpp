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
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "asrkit/audio.hpp"
#include "asrkit/corpus.hpp"
#include "asrkit/ctc.hpp"
#include "asrkit/matrix.hpp"

namespace asrkit::toymodel {

struct ConvLayer {
  int kernel = 1;
  int stride = 1;
  int channels = 1;
  bool operator==(const ConvLayer&) const = default;
};

/// Valid (unpadded) convolutions, each followed by per-frame layer norm and
/// GELU. Frames after a layer: floor((n - kernel) / stride) + 1.
struct EncoderConfig {
  std::vector<ConvLayer> layers{{10, 5, 32}, {8, 4, 32}, {4, 2, 32}};

  /// The seven-layer 512-channel stack with total stride 320.
  static EncoderConfig wav2vec2();

  void validate() const;
  int total_stride() const;
  /// Fewest samples that produce one frame.
  long receptive_field() const;
  int latent_dim() const { return layers.back().channels; }
  /// Frame count for `samples` inputs; 0 when shorter than the receptive field.
  long frames(long samples) const;
  bool operator==(const EncoderConfig&) const = default;
};

/// Post-norm transformer with a grouped convolutional positional step.
struct ContextConfig {
  int embed_dim = 64;
  int attention_heads = 2;
  int ffn_dim = 128;
  int blocks = 2;
  int pos_kernel = 9;  // odd, "same" padding
  int pos_groups = 4;

  void validate() const;
  bool operator==(const ContextConfig&) const = default;
};

struct MaskSpec {
  double time_mask_prob = 0.065;
  int time_mask_len = 10;
  double channel_mask_prob = 0.004;
  int channel_mask_len = 64;

  void validate() const;
};

/// Named tensors. Prefixes: "encoder.", "mask_embedding", "context.",
/// "quantizer.", "final_proj.", "proj.". Everything under "context." is the
/// context network that fine-tuning may freeze.
struct ModelParams {
  EncoderConfig encoder;
  ContextConfig context;
  ctc::Vocabulary vocab = ctc::Vocabulary::portuguese();
  int codebook_size = 32;
  std::map<std::string, Matrix> tensors;

  /// Uniform fan-in initialization, bound sqrt(3 / fan_in); biases zero,
  /// norm gains one.
  static ModelParams init(EncoderConfig encoder, ContextConfig context, ctc::Vocabulary vocab, std::uint64_t seed,
                          int codebook_size = 32);

  Matrix& at(const std::string& name);
  const Matrix& at(const std::string& name) const;
  std::size_t parameter_count() const;
  bool all_finite() const;
  /// FNV-1a over names, shapes and raw bytes of tensors whose name starts with `prefix`.
  std::string digest(std::string_view prefix = "") const;
};

inline constexpr std::string_view kContextPrefix = "context.";

/// Z: frames x latent_dim. Throws ClipTooShort below the receptive field and
/// InvalidArgument when the clip is not at 16 kHz.
Matrix encode(const ModelParams& p, const audio::AudioClip& clip);

struct MaskIndices {
  std::vector<int> time;      // sorted
  std::vector<int> channels;  // sorted
};

/// Every frame starts a span of `time_mask_len` with probability
/// `time_mask_prob` (spans clip at the end); channels likewise.
MaskIndices sample_masks(Eigen::Index frames, Eigen::Index channels, const MaskSpec& spec, std::uint64_t seed);

/// (1 / T) * sum_t [1 - (1 - p)^min(t + 1, len)].
double expected_time_mask_fraction(Eigen::Index frames, double prob, int len);

struct MaskedFeatures {
  Matrix features;
  MaskIndices masks;
};

/// Masked frames take the learned mask embedding; masked channels are zeroed.
MaskedFeatures apply_masks(const ModelParams& p, const Matrix& z, const MaskSpec& spec, std::uint64_t seed);

/// C: frames x embed_dim.
Matrix contextualize(const ModelParams& p, const Matrix& z_masked);

struct Quantized {
  Matrix vectors;             // frames x latent_dim
  std::vector<int> indices;   // chosen codebook rows
};

/// Nearest codebook row per frame (squared Euclidean, ties to lowest index).
Quantized quantize(const Matrix& codebook, const Matrix& z);
Quantized quantize(const ModelParams& p, const Matrix& z);

struct ContrastiveResult {
  double loss = 0.0;
  Matrix grad_c;  // d loss / d C
  Matrix grad_q;  // d loss / d Q
};

/// Mean over masked t of -ln softmax_0(cos(c_t, q_j) / temperature) with
/// j = t followed by `num_distractors` frames drawn without replacement from
/// the other masked frames, or with replacement from all other frames when
/// too few are masked. C and Q must have equal shapes. Throws NoMaskedFrames.
ContrastiveResult contrastive_loss(const Matrix& c, const Matrix& q, const std::vector<int>& masked_time,
                                   int num_distractors, double temperature, std::uint64_t seed);

/// Affine map to vocabulary scores, then log-softmax per frame.
ctc::LogProbLattice project(const ModelParams& p, const Matrix& c);

/// encode -> contextualize -> project without masking.
ctc::LogProbLattice infer(const ModelParams& p, const audio::AudioClip& clip);

using Gradients = std::map<std::string, Matrix>;

struct ObjectiveResult {
  double loss = 0.0;
  Gradients grads;
};

/// CTC loss of `target` for one clip with masks drawn from `seed`.
/// Throws InfeasibleTarget when the clip has too few frames for the target.
ObjectiveResult ctc_objective(const ModelParams& p, const audio::AudioClip& clip, const ctc::LabelSequence& target,
                              const MaskSpec& masks, std::uint64_t seed);

struct PretrainOptions {
  MaskSpec masks{0.065, 10, 0.0, 1};
  int num_distractors = 10;
  double temperature = 0.1;
  /// Weight of the codebook pull term |sg(z) - e|^2 that trains the codebook.
  double codebook_weight = 1.0;
};

/// Contrastive objective with straight-through quantized targets, plus the
/// codebook term. Throws NoMaskedFrames when the draw masks nothing.
ObjectiveResult contrastive_objective(const ModelParams& p, const audio::AudioClip& clip,
                                      const PretrainOptions& options, std::uint64_t seed);

/// Adam with bias correction. Moments are kept per tensor name.
class Adam {
 public:
  explicit Adam(double beta1 = 0.9, double beta2 = 0.98, double eps = 1e-8) : b1_(beta1), b2_(beta2), eps_(eps) {}
  /// Updates every tensor that has a gradient and is not skipped.
  void step(ModelParams& p, const Gradients& grads, double lr,
            const std::function<bool(const std::string&)>& skip = nullptr);

 private:
  double b1_, b2_, eps_;
  std::map<std::string, Matrix> m_, v_;
  std::map<std::string, long> t_;
};

struct Example {
  audio::AudioClip clip;
  std::string text;
};

struct FinetuneOptions {
  double lr = 3e-5;
  long freeze_updates = 10000;
  int accumulation_steps = 12;
  long max_updates = 100000;
  MaskSpec masks;
  std::uint64_t seed = 42;
  long eval_every = 500;
  /// Samples per micro-batch; a batch always holds at least one utterance.
  long max_samples_per_batch = 1'000'000;
};

struct LogEntry {
  long update = 0;
  double loss = 0.0;
  double lr = 0.0;
  bool frozen = false;
};

struct FinetuneResult {
  ModelParams best;
  long best_update = 0;
  double best_wer = 0.0;
  std::vector<LogEntry> log;
  std::vector<std::pair<long, double>> validation;  // (update, greedy WER)
  std::size_t skipped = 0;  // training examples whose target cannot fit
};

using ProgressFn = std::function<void(const LogEntry&)>;

/// CTC fine-tuning. Every update accumulates `accumulation_steps`
/// micro-batches and applies one Adam step to the mean per-utterance
/// gradient. The context network is not touched while update index <
/// freeze_updates. Validation greedy WER is measured every `eval_every`
/// updates and after the last one; the lowest wins (earliest on ties).
/// Throws EmptyManifest and DivergedLoss.
FinetuneResult finetune(const ModelParams& init, std::span<const Example> train, std::span<const Example> valid,
                        const FinetuneOptions& options, const ProgressFn& progress = nullptr);

/// Loads and resamples the audio of each utterance.
std::vector<Example> load_examples(const corpus::Manifest& m);

struct PretrainResult {
  ModelParams params;
  std::vector<LogEntry> log;
};

PretrainResult pretrain(const ModelParams& init, std::span<const Example> data, const PretrainOptions& options,
                        double lr, long updates, std::uint64_t seed, const ProgressFn& progress = nullptr);

/// Greedy-decoded corpus WER of `examples` (normalized references).
double greedy_wer(const ModelParams& p, std::span<const Example> examples);

// Checkpoint layout, little-endian:
//   "ASRKCKPT" | u32 version | u64 n | n bytes of JSON metadata (configs,
//   vocabulary, codebook size) | u32 tensor count | per tensor: u32 name
//   length, name bytes, u64 rows, u64 cols, rows * cols f64 in row-major order.
inline constexpr std::uint32_t kCheckpointVersion = 1;
std::vector<std::uint8_t> serialize_checkpoint(const ModelParams& p);
ModelParams deserialize_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const std::filesystem::path& path, const ModelParams& p);
ModelParams load_checkpoint(const std::filesystem::path& path);

/// {"update":..,"loss":..,"lr":..,"frozen":..} per line.
std::string format_log(const std::vector<LogEntry>& log);

}  // namespace asrkit::toymodel
