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

#include "asrkit/toymodel.hpp"

#include <algorithm>
#include <cmath>

#include "asrkit/error.hpp"
#include "asrkit/provenance.hpp"
#include "asrkit/random.hpp"
#include "toymodel_internal.hpp"

namespace asrkit::toymodel {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::InvalidArgument, what);
}

enum class InitKind { FanIn, Zero, One, Unit, Normal };

struct TensorSpec {
  std::string name;
  Eigen::Index rows, cols;
  InitKind kind;
  Eigen::Index fan_in = 1;
};

std::vector<TensorSpec> tensor_specs(const EncoderConfig& enc, const ContextConfig& ctx, std::size_t vocab_size,
                                     int codebook_size) {
  std::vector<TensorSpec> specs;
  auto linear = [&](const std::string& prefix, Eigen::Index in, Eigen::Index out) {
    specs.push_back({prefix + ".weight", in, out, InitKind::FanIn, in});
    specs.push_back({prefix + ".bias", 1, out, InitKind::Zero});
  };
  auto norm = [&](const std::string& prefix, Eigen::Index n) {
    specs.push_back({prefix + ".gain", 1, n, InitKind::One});
    specs.push_back({prefix + ".bias", 1, n, InitKind::Zero});
  };
  int in = 1;
  for (std::size_t i = 0; i < enc.layers.size(); ++i) {
    const auto& l = enc.layers[i];
    const std::string base = "encoder." + std::to_string(i);
    specs.push_back({base + ".conv.weight", l.kernel * in, l.channels, InitKind::FanIn, l.kernel * in});
    specs.push_back({base + ".conv.bias", 1, l.channels, InitKind::Zero});
    norm(base + ".norm", l.channels);
    in = l.channels;
  }
  const int latent = enc.latent_dim();
  const int e = ctx.embed_dim;
  specs.push_back({"mask_embedding", 1, latent, InitKind::Unit});
  linear("context.input_proj", latent, e);
  const int pos_in = ctx.pos_kernel * (e / ctx.pos_groups);
  specs.push_back({"context.pos_conv.weight", pos_in, e, InitKind::FanIn, pos_in});
  specs.push_back({"context.pos_conv.bias", 1, e, InitKind::Zero});
  norm("context.pos_norm", e);
  for (int b = 0; b < ctx.blocks; ++b) {
    const std::string base = "context.blocks." + std::to_string(b);
    linear(base + ".attn.q", e, e);
    linear(base + ".attn.k", e, e);
    linear(base + ".attn.v", e, e);
    linear(base + ".attn.out", e, e);
    norm(base + ".norm1", e);
    linear(base + ".ffn1", e, ctx.ffn_dim);
    linear(base + ".ffn2", ctx.ffn_dim, e);
    norm(base + ".norm2", e);
  }
  specs.push_back({"quantizer.codebook", codebook_size, latent, InitKind::Normal});
  linear("final_proj", e, latent);
  linear("proj", e, static_cast<Eigen::Index>(vocab_size));
  return specs;
}

}  // namespace

EncoderConfig EncoderConfig::wav2vec2() {
  EncoderConfig c;
  c.layers = {{10, 5, 512}, {3, 2, 512}, {3, 2, 512}, {3, 2, 512}, {3, 2, 512}, {2, 2, 512}, {2, 2, 512}};
  return c;
}

void EncoderConfig::validate() const {
  require(!layers.empty(), "encoder needs at least one layer");
  for (const auto& l : layers) {
    require(l.kernel >= 1 && l.stride >= 1 && l.channels >= 1, "encoder layers need kernel, stride, channels >= 1");
  }
}

int EncoderConfig::total_stride() const {
  int s = 1;
  for (const auto& l : layers) s *= l.stride;
  return s;
}

long EncoderConfig::receptive_field() const {
  long r = 1;
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) r = (r - 1) * it->stride + it->kernel;
  return r;
}

long EncoderConfig::frames(long samples) const {
  long n = samples;
  for (const auto& l : layers) {
    if (n < l.kernel) return 0;
    n = (n - l.kernel) / l.stride + 1;
  }
  return n;
}

void ContextConfig::validate() const {
  require(embed_dim >= 1 && attention_heads >= 1 && ffn_dim >= 1 && blocks >= 0, "context sizes must be positive");
  require(embed_dim % attention_heads == 0, "embed_dim must be divisible by attention_heads");
  require(pos_kernel >= 1 && pos_kernel % 2 == 1, "pos_kernel must be odd");
  require(pos_groups >= 1 && embed_dim % pos_groups == 0, "embed_dim must be divisible by pos_groups");
}

void MaskSpec::validate() const {
  require(time_mask_prob >= 0.0 && time_mask_prob <= 1.0, "time_mask_prob must lie in [0, 1]");
  require(channel_mask_prob >= 0.0 && channel_mask_prob <= 1.0, "channel_mask_prob must lie in [0, 1]");
  require(time_mask_len >= 1 && channel_mask_len >= 1, "mask lengths must be >= 1");
}

ModelParams ModelParams::init(EncoderConfig encoder, ContextConfig context, ctc::Vocabulary vocab,
                              std::uint64_t seed, int codebook_size) {
  encoder.validate();
  context.validate();
  require(codebook_size >= 1, "codebook_size must be >= 1");
  ModelParams p;
  p.encoder = std::move(encoder);
  p.context = context;
  p.vocab = std::move(vocab);
  p.codebook_size = codebook_size;
  Rng rng(seed);
  for (const auto& s : tensor_specs(p.encoder, p.context, p.vocab.size(), codebook_size)) {
    Matrix m(s.rows, s.cols);
    switch (s.kind) {
      case InitKind::Zero: m.setZero(); break;
      case InitKind::One: m.setOnes(); break;
      case InitKind::Unit:
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform();
        break;
      case InitKind::Normal:
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
        break;
      case InitKind::FanIn: {
        const double bound = std::sqrt(3.0 / static_cast<double>(s.fan_in));
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = (2.0 * rng.uniform() - 1.0) * bound;
        break;
      }
    }
    p.tensors.emplace(s.name, std::move(m));
  }
  return p;
}

Matrix& ModelParams::at(const std::string& name) {
  const auto it = tensors.find(name);
  if (it == tensors.end()) throw Error(Errc::InvalidArgument, "no tensor named " + name);
  return it->second;
}

const Matrix& ModelParams::at(const std::string& name) const {
  const auto it = tensors.find(name);
  if (it == tensors.end()) throw Error(Errc::InvalidArgument, "no tensor named " + name);
  return it->second;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [_, m] : tensors) n += static_cast<std::size_t>(m.size());
  return n;
}

bool ModelParams::all_finite() const {
  return std::all_of(tensors.begin(), tensors.end(), [](const auto& kv) { return kv.second.allFinite(); });
}

std::string ModelParams::digest(std::string_view prefix) const {
  std::string acc;
  for (const auto& [name, m] : tensors) {
    if (name.rfind(prefix, 0) != 0) continue;
    acc += name;
    acc += ':' + std::to_string(m.rows()) + 'x' + std::to_string(m.cols()) + ':';
    acc.append(reinterpret_cast<const char*>(m.data()), static_cast<std::size_t>(m.size()) * sizeof(double));
  }
  return fnv1a_hex(acc);
}

namespace detail {

Id Binder::operator()(const std::string& name) {
  if (const auto it = ids_.find(name); it != ids_.end()) return it->second;
  const Id id = g_.leaf(p_.at(name), track_);
  ids_.emplace(name, id);
  return id;
}

Gradients Binder::gradients() const {
  Gradients out;
  for (const auto& [name, id] : ids_) {
    const Matrix& g = g_.grad(id);
    out[name] = g.size() > 0 ? g : Matrix::Zero(g_.value(id).rows(), g_.value(id).cols());
  }
  return out;
}

Id build_linear(Binder& b, Id x, const std::string& prefix) {
  auto& g = b.graph();
  return g.add_row(g.matmul(x, b(prefix + ".weight")), b(prefix + ".bias"));
}

Id build_encoder(Binder& b, const audio::AudioClip& clip) {
  const auto& cfg = b.params().encoder;
  if (clip.sample_rate_hz != audio::kModelSampleRate) {
    throw Error(Errc::InvalidArgument, "encoder expects 16 kHz audio, got " + std::to_string(clip.sample_rate_hz));
  }
  const auto n = static_cast<long>(clip.samples.size());
  if (n < cfg.receptive_field()) {
    throw Error(Errc::ClipTooShort, std::to_string(n) + " samples, receptive field is " +
                                        std::to_string(cfg.receptive_field()));
  }
  auto& g = b.graph();
  Matrix x(n, 1);
  for (long i = 0; i < n; ++i) x(i, 0) = clip.samples[static_cast<std::size_t>(i)];
  Id h = g.leaf(std::move(x), false);
  for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
    const auto& l = cfg.layers[i];
    const std::string base = "encoder." + std::to_string(i);
    h = g.conv1d(h, b(base + ".conv.weight"), b(base + ".conv.bias"), l.kernel, l.stride, 0, 1);
    h = g.layer_norm(h, b(base + ".norm.gain"), b(base + ".norm.bias"));
    h = g.gelu(h);
  }
  return h;
}

std::vector<bool> to_flags(const std::vector<int>& indices, Eigen::Index n) {
  std::vector<bool> flags(static_cast<std::size_t>(n), false);
  for (int i : indices) flags.at(static_cast<std::size_t>(i)) = true;
  return flags;
}

Id build_masking(Binder& b, Id z, const MaskIndices& masks) {
  auto& g = b.graph();
  Id h = z;
  if (!masks.time.empty()) h = g.replace_rows(h, b("mask_embedding"), to_flags(masks.time, g.value(z).rows()));
  if (!masks.channels.empty()) h = g.zero_cols(h, to_flags(masks.channels, g.value(z).cols()));
  return h;
}

Id build_context(Binder& b, Id z_masked) {
  const auto& cfg = b.params().context;
  auto& g = b.graph();
  require(g.value(z_masked).cols() == b.params().encoder.latent_dim(), "context input width differs from latent_dim");
  Id h = build_linear(b, z_masked, "context.input_proj");
  const Id pos = g.gelu(g.conv1d(h, b("context.pos_conv.weight"), b("context.pos_conv.bias"), cfg.pos_kernel, 1,
                                 cfg.pos_kernel / 2, cfg.pos_groups));
  h = g.layer_norm(g.add(h, pos), b("context.pos_norm.gain"), b("context.pos_norm.bias"));
  const int d = cfg.embed_dim / cfg.attention_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (int blk = 0; blk < cfg.blocks; ++blk) {
    const std::string base = "context.blocks." + std::to_string(blk);
    const Id q = build_linear(b, h, base + ".attn.q");
    const Id k = build_linear(b, h, base + ".attn.k");
    const Id v = build_linear(b, h, base + ".attn.v");
    std::vector<Id> heads;
    for (int hd = 0; hd < cfg.attention_heads; ++hd) {
      const Id qh = g.slice_cols(q, hd * d, d);
      const Id kh = g.slice_cols(k, hd * d, d);
      const Id vh = g.slice_cols(v, hd * d, d);
      const Id weights = g.softmax_rows(g.scale(g.matmul_transposed(qh, kh), scale));
      heads.push_back(g.matmul(weights, vh));
    }
    const Id attn = build_linear(b, cfg.attention_heads == 1 ? heads.front() : g.concat_cols(heads), base + ".attn.out");
    h = g.layer_norm(g.add(h, attn), b(base + ".norm1.gain"), b(base + ".norm1.bias"));
    const Id ffn = build_linear(b, g.gelu(build_linear(b, h, base + ".ffn1")), base + ".ffn2");
    h = g.layer_norm(g.add(h, ffn), b(base + ".norm2.gain"), b(base + ".norm2.bias"));
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  auto mix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  };
  return mix(mix(mix(mix(seed) ^ a) ^ b) ^ c);
}

}  // namespace detail

Matrix encode(const ModelParams& p, const audio::AudioClip& clip) {
  autograd::Graph g;
  detail::Binder b(g, p, false);
  return g.value(detail::build_encoder(b, clip));
}

MaskIndices sample_masks(Eigen::Index frames, Eigen::Index channels, const MaskSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  auto draw = [&](Eigen::Index n, double prob, int len) {
    std::vector<bool> hit(static_cast<std::size_t>(n), false);
    for (Eigen::Index s = 0; s < n; ++s) {
      if (rng.uniform() < prob) {
        for (Eigen::Index i = s; i < std::min<Eigen::Index>(n, s + len); ++i) hit[static_cast<std::size_t>(i)] = true;
      }
    }
    std::vector<int> out;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (hit[static_cast<std::size_t>(i)]) out.push_back(static_cast<int>(i));
    }
    return out;
  };
  MaskIndices m;
  m.time = draw(frames, spec.time_mask_prob, spec.time_mask_len);
  m.channels = draw(channels, spec.channel_mask_prob, spec.channel_mask_len);
  return m;
}

double expected_time_mask_fraction(Eigen::Index frames, double prob, int len) {
  if (frames <= 0) return 0.0;
  double sum = 0.0;
  for (Eigen::Index t = 0; t < frames; ++t) {
    sum += 1.0 - std::pow(1.0 - prob, static_cast<double>(std::min<Eigen::Index>(t + 1, len)));
  }
  return sum / static_cast<double>(frames);
}

MaskedFeatures apply_masks(const ModelParams& p, const Matrix& z, const MaskSpec& spec, std::uint64_t seed) {
  MaskedFeatures out;
  out.masks = sample_masks(z.rows(), z.cols(), spec, seed);
  autograd::Graph g;
  detail::Binder b(g, p, false);
  out.features = g.value(detail::build_masking(b, g.leaf(z, false), out.masks));
  return out;
}

Matrix contextualize(const ModelParams& p, const Matrix& z_masked) {
  autograd::Graph g;
  detail::Binder b(g, p, false);
  return g.value(detail::build_context(b, g.leaf(z_masked, false)));
}

Quantized quantize(const Matrix& codebook, const Matrix& z) {
  require(codebook.rows() >= 1, "codebook is empty");
  require(codebook.cols() == z.cols(), "codebook width differs from latent width");
  Quantized q;
  q.vectors.resize(z.rows(), z.cols());
  q.indices.resize(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index t = 0; t < z.rows(); ++t) {
    Eigen::Index best = 0;
    double best_d = (codebook.row(0) - z.row(t)).squaredNorm();
    for (Eigen::Index k = 1; k < codebook.rows(); ++k) {
      const double d = (codebook.row(k) - z.row(t)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    q.indices[static_cast<std::size_t>(t)] = static_cast<int>(best);
    q.vectors.row(t) = codebook.row(best);
  }
  return q;
}

Quantized quantize(const ModelParams& p, const Matrix& z) { return quantize(p.at("quantizer.codebook"), z); }

ContrastiveResult contrastive_loss(const Matrix& c, const Matrix& q, const std::vector<int>& masked_time,
                                   int num_distractors, double temperature, std::uint64_t seed) {
  if (masked_time.empty()) throw Error(Errc::NoMaskedFrames, "contrastive loss needs masked frames");
  require(c.rows() == q.rows() && c.cols() == q.cols(), "C and Q shapes differ");
  require(num_distractors >= 0, "num_distractors must be >= 0");
  require(temperature > 0.0, "temperature must be positive");
  const Eigen::Index frames = c.rows();
  for (int t : masked_time) require(t >= 0 && t < frames, "masked index out of range");

  Rng rng(seed);
  ContrastiveResult r;
  r.grad_c = Matrix::Zero(c.rows(), c.cols());
  r.grad_q = Matrix::Zero(q.rows(), q.cols());
  const double inv_m = 1.0 / static_cast<double>(masked_time.size());
  const auto k = static_cast<std::size_t>(num_distractors);

  for (int t : masked_time) {
    // Candidate 0 is the true target.
    std::vector<int> cand{t};
    std::vector<int> others;
    for (int o : masked_time) {
      if (o != t) others.push_back(o);
    }
    if (others.size() >= k) {
      for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(others.size() - i));
        std::swap(others[i], others[j]);
        cand.push_back(others[i]);
      }
    } else {
      for (std::size_t i = 0; i < k; ++i) {
        if (frames == 1) {
          cand.push_back(t);
          continue;
        }
        auto j = static_cast<int>(rng.below(static_cast<std::uint64_t>(frames - 1)));
        if (j >= t) ++j;
        cand.push_back(j);
      }
    }

    const auto ct = c.row(t);
    const double nc = ct.norm();
    std::vector<double> cosv(cand.size()), logits(cand.size());
    for (std::size_t j = 0; j < cand.size(); ++j) {
      const auto qj = q.row(cand[j]);
      const double denom = std::max(nc * qj.norm(), 1e-12);
      cosv[j] = ct.dot(qj) / denom;
      logits[j] = cosv[j] / temperature;
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    const double lse = mx + std::log(z);
    r.loss += (lse - logits[0]) * inv_m;

    for (std::size_t j = 0; j < cand.size(); ++j) {
      const double dlogit = (std::exp(logits[j] - lse) - (j == 0 ? 1.0 : 0.0)) * inv_m / temperature;
      if (dlogit == 0.0) continue;
      const auto qj = q.row(cand[j]);
      const double nq = qj.norm();
      if (nc == 0.0 || nq == 0.0) continue;
      r.grad_c.row(t) += dlogit * (qj / (nc * nq) - cosv[j] * ct / (nc * nc));
      r.grad_q.row(cand[j]) += dlogit * (ct / (nc * nq) - cosv[j] * qj / (nq * nq));
    }
  }
  return r;
}

ctc::LogProbLattice project(const ModelParams& p, const Matrix& c) {
  const Matrix& w = p.at("proj.weight");
  require(w.cols() == static_cast<Eigen::Index>(p.vocab.size()), "projection width differs from vocabulary size");
  require(c.cols() == w.rows(), "projection input width differs from embed_dim");
  Matrix logits = c * w;
  logits.rowwise() += p.at("proj.bias").row(0);
  return ctc::lattice_from_logits(logits, p.vocab);
}

ctc::LogProbLattice infer(const ModelParams& p, const audio::AudioClip& clip) {
  autograd::Graph g;
  detail::Binder b(g, p, false);
  const detail::Id c = detail::build_context(b, detail::build_encoder(b, clip));
  return project(p, g.value(c));
}

}  // namespace asrkit::toymodel
