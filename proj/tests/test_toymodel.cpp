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


#include <cmath>
#include <numbers>
#include <set>
#include <sstream>
#include <tuple>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "asrkit/error.hpp"
#include "asrkit/random.hpp"
#include "asrkit/toymodel.hpp"
#include "oracles.hpp"

using namespace asrkit;
using namespace asrkit::toymodel;

namespace {

EncoderConfig tiny_encoder() {
  EncoderConfig e;
  e.layers = {{4, 2, 6}, {3, 2, 6}};
  return e;
}

ContextConfig tiny_context(int blocks = 1) {
  ContextConfig c;
  c.embed_dim = 8;
  c.attention_heads = 2;
  c.ffn_dim = 8;
  c.blocks = blocks;
  c.pos_kernel = 3;
  c.pos_groups = 2;
  return c;
}

ModelParams tiny_model(std::uint64_t seed = 3, int blocks = 1) {
  return ModelParams::init(tiny_encoder(), tiny_context(blocks), oracle::small_vocab(5), seed, 4);
}

audio::AudioClip noise_clip(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  audio::AudioClip c;
  for (std::size_t i = 0; i < n; ++i) c.samples.push_back(0.5 * (2 * rng.uniform() - 1));
  return c;
}

Matrix random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = 2 * rng.uniform() - 1;
  return m;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

// Spot-checks analytic gradients of `loss` against central differences on a
// few entries of every tensor accepted by `include`.
double worst_parameter_error(const ModelParams& p, const Gradients& grads,
                             const std::function<double(const ModelParams&)>& loss,
                             const std::function<bool(const std::string&)>& include) {
  Rng rng(77);
  double worst = 0.0;
  for (const auto& [name, g] : grads) {
    if (!include(name)) continue;
    const auto& w = p.at(name);
    for (int probe = 0; probe < 3; ++probe) {
      const auto i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(w.size())));
      ModelParams up = p, down = p;
      up.at(name).data()[i] += 1e-5;
      down.at(name).data()[i] -= 1e-5;
      const double numeric = (loss(up) - loss(down)) / 2e-5;
      const double analytic = g.data()[i];
      const double err = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-4});
      if (err > worst) {
        worst = err;
        MESSAGE(name << "[" << i << "] analytic " << analytic << " numeric " << numeric);
      }
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("encoder geometry") {
  const EncoderConfig d;
  CHECK(d.total_stride() == 40);
  CHECK(d.receptive_field() == 105);
  CHECK(d.latent_dim() == 32);
  // 3200 -> floor((3200 - 10) / 5) + 1 = 639 -> floor((639 - 8) / 4) + 1 = 158 -> floor((158 - 4) / 2) + 1 = 78
  CHECK(d.frames(3200) == 78);
  CHECK(d.frames(104) == 0);
  CHECK(d.frames(105) == 1);

  const auto w = EncoderConfig::wav2vec2();
  CHECK(w.total_stride() == 320);
  CHECK(w.receptive_field() == 400);
  CHECK(w.frames(3200) == 9);
  CHECK(w.frames(16000) == 49);

  for (long n = 105; n < 3000; n += 37) {
    const long f = d.frames(n);
    CHECK(f == (n - d.receptive_field()) / d.total_stride() + 1);
    CHECK(std::abs(d.frames(2 * n) - 2 * f) <= d.receptive_field() / d.total_stride() + 1);
  }

  EncoderConfig bad;
  bad.layers = {{3, 0, 4}};
  CHECK_THROWS_AS(bad.validate(), Error);
  ContextConfig ctx;
  ctx.attention_heads = 3;
  CHECK_THROWS_AS(ctx.validate(), Error);
  ctx = {};
  ctx.pos_kernel = 4;
  CHECK_THROWS_AS(ctx.validate(), Error);
  MaskSpec ms;
  ms.time_mask_len = 0;
  CHECK_THROWS_AS(ms.validate(), Error);
}

TEST_CASE("init") {
  const auto p = ModelParams::init({}, {}, ctc::Vocabulary::portuguese(), 42);
  CHECK(p.at("proj.weight").cols() == static_cast<Eigen::Index>(p.vocab.size()));
  CHECK(p.at("encoder.0.conv.weight").rows() == 10);
  CHECK(p.at("encoder.1.conv.weight").rows() == 8 * 32);
  CHECK(p.at("context.pos_conv.weight").rows() == 9 * 16);
  CHECK(p.at("encoder.2.norm.gain").isOnes());
  CHECK(p.at("proj.bias").isZero());
  const double bound = std::sqrt(3.0 / 64.0);
  CHECK(p.at("context.blocks.1.ffn1.weight").cwiseAbs().maxCoeff() <= bound);
  CHECK(p.at("context.blocks.1.ffn1.weight").cwiseAbs().maxCoeff() > 0.9 * bound);
  CHECK(p.at("mask_embedding").minCoeff() >= 0.0);
  CHECK(p.all_finite());
  CHECK(p.digest() == ModelParams::init({}, {}, ctc::Vocabulary::portuguese(), 42).digest());
  CHECK(p.digest() != ModelParams::init({}, {}, ctc::Vocabulary::portuguese(), 43).digest());
  CHECK(p.parameter_count() > 50000);
  CHECK_THROWS_AS(p.at("missing"), Error);
}

TEST_CASE("encode") {
  const auto p = ModelParams::init({}, {}, ctc::Vocabulary::portuguese(), 1);
  audio::AudioClip zero;
  zero.samples.assign(3200, 0.0);
  const auto z = encode(p, zero);
  CHECK(z.rows() == 78);
  CHECK(z.cols() == 32);
  for (Eigen::Index t = 1; t < z.rows(); ++t) CHECK((z.row(t) - z.row(0)).cwiseAbs().maxCoeff() == 0.0);

  const auto clip = noise_clip(2000, 5);
  CHECK(encode(p, clip) == encode(p, clip));

  try {
    encode(p, noise_clip(104, 1));
    FAIL("expected ClipTooShort");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ClipTooShort);
  }
  auto slow = clip;
  slow.sample_rate_hz = 8000;
  CHECK_THROWS_AS(encode(p, slow), Error);
  CHECK(encode(p, noise_clip(105, 1)).rows() == 1);
}

TEST_CASE("mask sampling") {
  const auto p = tiny_model();
  Rng rng(1);
  const Matrix z = random_matrix(rng, 30, 6);

  const auto none = apply_masks(p, z, {0.0, 5, 0.0, 2}, 9);
  CHECK(none.features == z);
  CHECK(none.masks.time.empty());
  CHECK(none.masks.channels.empty());

  const auto all = apply_masks(p, z, {1.0, 30, 0.0, 1}, 9);
  CHECK(all.masks.time.size() == 30);
  for (Eigen::Index t = 0; t < 30; ++t) CHECK(all.features.row(t) == p.at("mask_embedding"));

  const auto some = apply_masks(p, z, {0.2, 3, 0.3, 1}, 4);
  const auto tf = std::set<int>(some.masks.time.begin(), some.masks.time.end());
  const auto cf = std::set<int>(some.masks.channels.begin(), some.masks.channels.end());
  for (Eigen::Index t = 0; t < z.rows(); ++t) {
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      if (cf.count(static_cast<int>(c))) {
        CHECK(some.features(t, c) == 0.0);
      } else if (tf.count(static_cast<int>(t))) {
        CHECK(some.features(t, c) == p.at("mask_embedding")(0, c));
      } else {
        CHECK(some.features(t, c) == z(t, c));
      }
    }
  }
  const auto again = apply_masks(p, z, {0.2, 3, 0.3, 1}, 4);
  CHECK(again.features == some.features);
  CHECK(std::is_sorted(some.masks.time.begin(), some.masks.time.end()));
}

TEST_CASE("masked fraction matches its expectation") {
  // Frame t is covered unless none of the min(t + 1, len) spans that reach it start.
  for (const auto& [frames, prob, len] : std::vector<std::tuple<int, double, int>>{{50, 0.065, 10}, {20, 0.2, 3}, {7, 0.5, 10}}) {
    double closed = 0.0;
    for (int t = 0; t < frames; ++t) closed += 1.0 - std::pow(1.0 - prob, std::min(t + 1, len));
    closed /= frames;
    CHECK(expected_time_mask_fraction(frames, prob, len) == doctest::Approx(closed).epsilon(1e-12));
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
      total += static_cast<double>(sample_masks(frames, 1, {prob, len, 0.0, 1}, seed).time.size()) / frames;
    }
    CHECK(std::abs(total / 10000 / closed - 1.0) <= 0.02);
  }
}

TEST_CASE("context network") {
  const auto p = tiny_model();
  Rng rng(2);
  const Matrix z = random_matrix(rng, 9, 6);
  const Matrix c = contextualize(p, z);
  CHECK(c.rows() == 9);
  CHECK(c.cols() == 8);
  CHECK(contextualize(p, z) == c);
  CHECK(contextualize(p, z.topRows(1)).allFinite());

  Matrix swapped = z;
  swapped.row(0).swap(swapped.row(5));
  Matrix back = contextualize(p, swapped);
  back.row(0).swap(back.row(5));
  CHECK((back - c).cwiseAbs().maxCoeff() > 1e-6);
  CHECK_THROWS_AS(contextualize(p, random_matrix(rng, 4, 5)), Error);
}

TEST_CASE("context network without blocks is the positional step") {
  const auto p = tiny_model(8, 0);
  Rng rng(3);
  const Matrix z = random_matrix(rng, 7, 6);
  const Matrix c = contextualize(p, z);

  const Matrix h = (z * p.at("context.input_proj.weight")).rowwise() + RowVector(p.at("context.input_proj.bias"));
  const auto& w = p.at("context.pos_conv.weight");
  const int k = 3, groups = 2, e = 8, cg = e / groups;
  for (Eigen::Index t = 0; t < 7; ++t) {
    RowVector pre(e);
    for (int o = 0; o < e; ++o) {
      double s = p.at("context.pos_conv.bias")(0, o);
      const int g = o / cg;
      for (int j = 0; j < k; ++j) {
        const Eigen::Index src = t + j - k / 2;
        if (src < 0 || src >= 7) continue;
        for (int ci = 0; ci < cg; ++ci) s += h(src, g * cg + ci) * w(j * cg + ci, o);
      }
      pre(o) = h(t, o) + gelu(s);
    }
    const double mean = pre.mean();
    const double var = (pre.array() - mean).square().mean();
    for (int o = 0; o < e; ++o) {
      const double expected = (pre(o) - mean) / std::sqrt(var + 1e-5) * p.at("context.pos_norm.gain")(0, o) +
                              p.at("context.pos_norm.bias")(0, o);
      CHECK(std::abs(c(t, o) - expected) <= 1e-12);
    }
  }
}

TEST_CASE("quantizer") {
  Matrix codebook(3, 2);
  codebook << 0, 0, 1, 1, -2, 5;
  Matrix z(3, 2);
  z << 1, 1, 0.4, 0.4, -2, 4;
  auto q = quantize(codebook, z);
  CHECK(q.indices == std::vector<int>{1, 0, 2});
  CHECK(q.vectors.row(0) == z.row(0));

  Matrix one(1, 2);
  one << 7, 7;
  CHECK(quantize(one, z).indices == std::vector<int>{0, 0, 0});

  Matrix pm(2, 1);
  pm << 1, -1;
  CHECK(quantize(pm, Matrix::Zero(1, 1)).indices == std::vector<int>{0});
  CHECK_THROWS_AS(quantize(Matrix(0, 2), z), Error);
}

TEST_CASE("contrastive loss") {
  Rng rng(4);
  SUBCASE("identical candidates give ln(K + 1)") {
    const Matrix c = random_matrix(rng, 12, 5);
    const Matrix q = RowVector(random_matrix(rng, 1, 5)).replicate(12, 1);
    for (int k : {1, 4, 10}) {
      const auto r = contrastive_loss(c, q, {0, 2, 3, 7, 8}, k, 0.1, 1);
      CHECK(r.loss == doctest::Approx(std::log(k + 1.0)).epsilon(1e-12));
    }
  }
  SUBCASE("aligned target with orthogonal distractors tends to zero") {
    const Matrix c = Matrix::Identity(4, 4);
    const auto r = contrastive_loss(c, c, {0, 1, 2, 3}, 3, 0.01, 1);
    CHECK(r.loss < 1e-40);
  }
  SUBCASE("finite differences") {
    for (int trial = 0; trial < 10; ++trial) {
      const Matrix c = random_matrix(rng, 8, 4);
      const Matrix q = random_matrix(rng, 8, 4);
      const std::vector<int> masked = trial % 2 ? std::vector<int>{1, 2, 5} : std::vector<int>{0, 1, 2, 4, 6, 7};
      const auto r = contrastive_loss(c, q, masked, 4, 0.5, trial);
      const auto nc = oracle::numeric_gradient([&](const Matrix& x) { return contrastive_loss(x, q, masked, 4, 0.5, trial).loss; }, c);
      const auto nq = oracle::numeric_gradient([&](const Matrix& x) { return contrastive_loss(c, x, masked, 4, 0.5, trial).loss; }, q);
      CHECK(oracle::max_relative_error(r.grad_c, nc) <= 1e-5);
      CHECK(oracle::max_relative_error(r.grad_q, nq) <= 1e-5);
    }
  }
  SUBCASE("errors and determinism") {
    const Matrix c = random_matrix(rng, 6, 3);
    try {
      contrastive_loss(c, c, {}, 2, 0.1, 1);
      FAIL("expected NoMaskedFrames");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::NoMaskedFrames);
    }
    const Matrix q = random_matrix(rng, 6, 3);
    CHECK(contrastive_loss(c, q, {1, 3}, 5, 0.1, 9).loss == contrastive_loss(c, q, {1, 3}, 5, 0.1, 9).loss);
    CHECK_THROWS_AS(contrastive_loss(c, q.topRows(5), {1}, 2, 0.1, 1), Error);
  }
}

TEST_CASE("projection") {
  auto p = tiny_model();
  Rng rng(5);
  const Matrix c = random_matrix(rng, 6, 8);
  const auto lat = project(p, c);
  CHECK(lat.frames.cols() == static_cast<Eigen::Index>(p.vocab.size()));
  for (Eigen::Index t = 0; t < 6; ++t) CHECK(std::abs(logsumexp(lat.frames.row(t))) <= 1e-9);
  p.at("proj.weight").setZero();
  const auto uniform = project(p, c);
  CHECK((uniform.frames.array() + std::log(5.0)).abs().maxCoeff() <= 1e-12);

  const auto clip = noise_clip(300, 3);
  const auto full = infer(p, clip);
  CHECK(full.num_frames() == encode(p, clip).rows());
  const auto masked = apply_masks(p, encode(p, clip), {0.3, 2, 0.2, 1}, 1);
  CHECK(project(p, contextualize(p, masked.features)).num_frames() == encode(p, clip).rows());
}

TEST_CASE("CTC objective gradients") {
  const auto p = tiny_model(11);
  const auto clip = noise_clip(160, 12);
  const ctc::LabelSequence target{2, 3, 1, 4};
  const MaskSpec masks{0.3, 2, 0.3, 1};
  const auto r = ctc_objective(p, clip, target, masks, 5);
  CHECK(std::isfinite(r.loss));
  CHECK(r.grads.count("mask_embedding"));
  CHECK(r.grads.count("encoder.0.conv.weight"));
  CHECK(r.grads.count("context.blocks.0.attn.q.weight"));
  const auto loss = [&](const ModelParams& q) { return ctc_objective(q, clip, target, masks, 5).loss; };
  CHECK(worst_parameter_error(p, r.grads, loss, [](const std::string&) { return true; }) <= 1e-5);

  try {
    ctc_objective(p, noise_clip(20, 1), {2, 2, 2}, masks, 1);
    FAIL("expected InfeasibleTarget");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InfeasibleTarget);
  }
}

TEST_CASE("contrastive objective gradients") {
  const auto p = tiny_model(13);
  const auto clip = noise_clip(200, 14);
  PretrainOptions opts;
  opts.masks = {0.3, 2, 0.0, 1};
  opts.num_distractors = 3;
  opts.temperature = 0.5;
  const auto r = contrastive_objective(p, clip, opts, 3);
  CHECK(std::isfinite(r.loss));
  CHECK(r.grads.count("quantizer.codebook"));
  CHECK(r.grads.at("encoder.0.conv.weight").cwiseAbs().maxCoeff() > 0.0);
  // Targets are quantized, so only parameters on the context path are smooth.
  const auto loss = [&](const ModelParams& q) { return contrastive_objective(q, clip, opts, 3).loss; };
  CHECK(worst_parameter_error(p, r.grads, loss, [](const std::string& n) {
          return n.rfind("context.", 0) == 0 || n.rfind("final_proj.", 0) == 0 || n == "mask_embedding";
        }) <= 1e-5);

  opts.masks = {0.0, 2, 0.0, 1};
  CHECK_THROWS_AS(contrastive_objective(p, clip, opts, 3), Error);
}

TEST_CASE("adam") {
  auto p = tiny_model();
  const auto before = p;
  Gradients g{{"proj.bias", Matrix::Ones(1, 5)}, {"context.pos_norm.bias", Matrix::Ones(1, 8)}};
  Adam zero;
  zero.step(p, g, 0.0);
  CHECK(p.digest() == before.digest());

  Adam adam;
  adam.step(p, g, 0.1, [](const std::string& n) { return n.rfind("context.", 0) == 0; });
  CHECK(p.at("context.pos_norm.bias") == before.at("context.pos_norm.bias"));
  // First bias-corrected step moves every coordinate by about lr.
  CHECK((p.at("proj.bias").array() + 0.1).abs().maxCoeff() <= 1e-6);
  Gradients bad{{"proj.bias", Matrix::Ones(2, 5)}};
  CHECK_THROWS_AS(adam.step(p, bad, 0.1), Error);
}

TEST_CASE("fine-tuning contracts") {
  const auto init = tiny_model(21);
  std::vector<Example> train{{noise_clip(400, 1), "ab"}, {noise_clip(300, 2), "ba a"}, {noise_clip(8, 3), "abab"}};
  std::vector<Example> valid{{noise_clip(400, 1), "ab"}};

  FinetuneOptions opts;
  opts.lr = 1e-2;
  opts.max_updates = 6;
  opts.freeze_updates = 6;
  opts.accumulation_steps = 2;
  opts.eval_every = 2;
  opts.masks = {0.1, 2, 0.0, 1};
  std::vector<LogEntry> seen;
  const auto frozen = finetune(init, train, valid, opts, [&](const LogEntry& e) { seen.push_back(e); });
  CHECK(frozen.skipped == 1);
  CHECK(frozen.log.size() == 6);
  CHECK(seen.size() == 6);
  for (const auto& e : frozen.log) CHECK(e.frozen);
  CHECK(frozen.validation.size() == 4);
  CHECK(frozen.validation.front().first == 0);
  CHECK(frozen.validation.back().first == 6);
  CHECK(frozen.best.digest("context.") == init.digest("context."));

  opts.freeze_updates = 2;
  const auto thawed = finetune(init, train, valid, opts);
  CHECK(thawed.log[1].frozen);
  CHECK_FALSE(thawed.log[2].frozen);
  double best = 1e9;
  for (const auto& [u, w] : thawed.validation) best = std::min(best, w);
  CHECK(thawed.best_wer == best);

  opts.lr = 0.0;
  opts.masks = {0.0, 1, 0.0, 1};
  opts.accumulation_steps = 1;
  const std::vector<Example> single{train[0]};
  const auto still = finetune(init, single, valid, opts);
  for (const auto& e : still.log) CHECK(e.loss == still.log.front().loss);
  CHECK(still.best.digest() == init.digest());

  CHECK_THROWS_AS(finetune(init, std::vector<Example>{}, valid, opts), Error);
  try {
    finetune(init, std::vector<Example>{train[2]}, valid, opts);
    FAIL("expected EmptyManifest");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EmptyManifest);
  }
  auto broken = train[0];
  broken.clip.samples[10] = std::nan("");
  try {
    finetune(init, std::vector<Example>{broken}, valid, opts);
    FAIL("expected DivergedLoss");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DivergedLoss);
  }

  const auto log = format_log(thawed.log);
  std::istringstream lines(log);
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j["update"] == ++n);
    CHECK(j.contains("loss"));
    CHECK(j.contains("lr"));
    CHECK(j.contains("frozen"));
  }
  CHECK(n == 6);
}

TEST_CASE("pre-training leaves the vocabulary head alone") {
  const auto init = tiny_model(31);
  std::vector<Example> data{{noise_clip(400, 4), ""}, {noise_clip(300, 5), ""}};
  PretrainOptions opts;
  opts.masks = {0.3, 2, 0.0, 1};
  opts.num_distractors = 3;
  const auto r = pretrain(init, data, opts, 1e-3, 4, 7);
  CHECK(r.log.size() == 4);
  CHECK(r.params.digest("proj.") == init.digest("proj."));
  CHECK(r.params.digest("context.") != init.digest("context."));
  CHECK(r.params.digest("quantizer.") != init.digest("quantizer."));
  for (const auto& e : r.log) CHECK(std::isfinite(e.loss));
}

TEST_CASE("checkpoints") {
  const auto p = tiny_model(41);
  const auto bytes = serialize_checkpoint(p);
  const auto back = deserialize_checkpoint(bytes);
  CHECK(back.digest() == p.digest());
  CHECK(back.encoder == p.encoder);
  CHECK(back.context == p.context);
  CHECK(back.vocab == p.vocab);
  CHECK(back.codebook_size == p.codebook_size);

  oracle::TempDir dir("ckpt");
  save_checkpoint(dir / "m.ckpt", p);
  CHECK(load_checkpoint(dir / "m.ckpt").digest() == p.digest());

  auto expect_malformed = [](std::vector<std::uint8_t> b) {
    try {
      deserialize_checkpoint(b);
      FAIL("expected MalformedCheckpoint");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::MalformedCheckpoint);
    }
  };
  auto b = bytes;
  b[0] = 'X';
  expect_malformed(b);
  b = bytes;
  b[8] = 2;
  expect_malformed(b);
  b = bytes;
  b.push_back(0);
  expect_malformed(b);
  expect_malformed(std::vector<std::uint8_t>(bytes.begin(), bytes.end() - 1));
  expect_malformed(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 5));
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), Error);
}

TEST_CASE("greedy WER on examples") {
  const auto p = tiny_model(51);
  std::vector<Example> ex{{noise_clip(400, 1), "ab"}, {noise_clip(50, 2), "ba"}};
  const double w = greedy_wer(p, ex);
  CHECK(w >= 0.0);
  CHECK(std::isfinite(w));
}
