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
#include <numeric>

#include "json.hpp"

#include "asrkit/error.hpp"
#include "asrkit/metrics.hpp"
#include "asrkit/random.hpp"
#include "asrkit/textnorm.hpp"
#include "asrkit/toymodel.hpp"
#include "toymodel_internal.hpp"

namespace asrkit::toymodel {
namespace {

using detail::Id;

bool is_context(const std::string& name) { return name.rfind(kContextPrefix, 0) == 0; }

void add_into(Gradients& acc, const Gradients& g) {
  for (const auto& [name, m] : g) {
    auto it = acc.find(name);
    if (it == acc.end()) {
      acc.emplace(name, m);
    } else {
      it->second += m;
    }
  }
}

// Fewest frames that can carry `labels`: one per label plus a blank between repeats.
long min_frames(const ctc::LabelSequence& labels) {
  long n = static_cast<long>(labels.size());
  for (std::size_t i = 1; i < labels.size(); ++i) {
    if (labels[i] == labels[i - 1]) ++n;
  }
  return n;
}

// Cycles through a seeded permutation, reshuffling after every pass.
class Sampler {
 public:
  Sampler(std::size_t n, std::uint64_t seed) : order_(n), rng_(seed) { reshuffle(); }

  std::size_t next() {
    if (pos_ == order_.size()) reshuffle();
    return order_[pos_++];
  }

 private:
  void reshuffle() {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    rng_.shuffle(std::span<std::size_t>(order_));
    pos_ = 0;
  }

  std::vector<std::size_t> order_;
  Rng rng_;
  std::size_t pos_ = 0;
};

}  // namespace

ObjectiveResult ctc_objective(const ModelParams& p, const audio::AudioClip& clip, const ctc::LabelSequence& target,
                              const MaskSpec& masks, std::uint64_t seed) {
  autograd::Graph g;
  detail::Binder b(g, p, true);
  const Id z = detail::build_encoder(b, clip);
  const auto drawn = sample_masks(g.value(z).rows(), g.value(z).cols(), masks, seed);
  const Id c = detail::build_context(b, detail::build_masking(b, z, drawn));
  const Id logits = detail::build_linear(b, c, "proj");
  const auto lattice = ctc::lattice_from_logits(g.value(logits), p.vocab);
  const auto lg = ctc::ctc_loss_and_gradient(lattice, target);
  g.backward(logits, lg.gradient);
  return {lg.loss, b.gradients()};
}

ObjectiveResult contrastive_objective(const ModelParams& p, const audio::AudioClip& clip,
                                      const PretrainOptions& options, std::uint64_t seed) {
  autograd::Graph g;
  detail::Binder b(g, p, true);
  const Id z = detail::build_encoder(b, clip);
  const Matrix zv = g.value(z);
  const auto drawn = sample_masks(zv.rows(), zv.cols(), options.masks, detail::derive_seed(seed, 1));
  if (drawn.time.empty()) throw Error(Errc::NoMaskedFrames, "mask draw selected no frames");
  const Id c = detail::build_context(b, detail::build_masking(b, z, drawn));
  const Id cp = detail::build_linear(b, c, "final_proj");

  const Matrix& codebook = p.at("quantizer.codebook");
  const auto q = quantize(codebook, zv);
  const auto cl = contrastive_loss(g.value(cp), q.vectors, drawn.time, options.num_distractors,
                                   options.temperature, detail::derive_seed(seed, 2));

  // Codebook pull: w * mean_t |sg(z_t) - e_k(t)|^2, gradient only to the codebook.
  Matrix dcode = Matrix::Zero(codebook.rows(), codebook.cols());
  double pull = 0.0;
  const double inv_t = 1.0 / static_cast<double>(zv.rows());
  for (Eigen::Index t = 0; t < zv.rows(); ++t) {
    const auto k = q.indices[static_cast<std::size_t>(t)];
    const RowVector diff = codebook.row(k) - zv.row(t);
    pull += diff.squaredNorm() * inv_t;
    dcode.row(k) += 2.0 * options.codebook_weight * inv_t * diff;
  }

  // Straight-through: the target gradient flows to the encoder output.
  g.backward({{cp, cl.grad_c}, {z, cl.grad_q}});
  ObjectiveResult r{cl.loss + options.codebook_weight * pull, b.gradients()};
  r.grads["quantizer.codebook"] = dcode;
  return r;
}

void Adam::step(ModelParams& p, const Gradients& grads, double lr,
                const std::function<bool(const std::string&)>& skip) {
  for (const auto& [name, g] : grads) {
    if (skip && skip(name)) continue;
    Matrix& w = p.at(name);
    if (g.rows() != w.rows() || g.cols() != w.cols()) {
      throw Error(Errc::InvalidArgument, "gradient shape differs for " + name);
    }
    auto [mit, m_new] = m_.try_emplace(name, Matrix::Zero(w.rows(), w.cols()));
    auto [vit, v_new] = v_.try_emplace(name, Matrix::Zero(w.rows(), w.cols()));
    const long t = ++t_[name];
    mit->second = b1_ * mit->second + (1.0 - b1_) * g;
    vit->second = b2_ * vit->second + (1.0 - b2_) * g.cwiseProduct(g);
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t));
    if (lr == 0.0) continue;
    w.array() -= lr * (mit->second.array() / c1) / ((vit->second.array() / c2).sqrt() + eps_);
  }
}

std::vector<Example> load_examples(const corpus::Manifest& m) {
  std::vector<Example> out;
  out.reserve(m.size());
  for (const auto& u : m.utterances) {
    auto clip = audio::load_wav(u.audio_path);
    if (clip.sample_rate_hz != audio::kModelSampleRate) clip = audio::resample(clip, audio::kModelSampleRate);
    out.push_back({std::move(clip), u.text});
  }
  return out;
}

double greedy_wer(const ModelParams& p, std::span<const Example> examples) {
  std::vector<metrics::RefHyp> pairs;
  pairs.reserve(examples.size());
  for (const auto& ex : examples) {
    metrics::RefHyp rh;
    rh.ref = textnorm::normalize(ex.text);
    if (p.encoder.frames(static_cast<long>(ex.clip.samples.size())) > 0) {
      rh.hyp = p.vocab.words(ctc::greedy_decode(infer(p, ex.clip)));
    }
    pairs.push_back(std::move(rh));
  }
  return metrics::corpus_wer(pairs);
}

FinetuneResult finetune(const ModelParams& init, std::span<const Example> train, std::span<const Example> valid,
                        const FinetuneOptions& options, const ProgressFn& progress) {
  if (train.empty()) throw Error(Errc::EmptyManifest, "training set is empty");
  if (valid.empty()) throw Error(Errc::EmptyManifest, "validation set is empty");
  if (options.lr < 0.0 || options.accumulation_steps < 1 || options.max_updates < 0 || options.eval_every < 1 ||
      options.freeze_updates < 0 || options.max_samples_per_batch < 1) {
    throw Error(Errc::InvalidArgument, "invalid fine-tuning options");
  }
  options.masks.validate();

  FinetuneResult result;
  std::vector<std::size_t> usable;
  std::vector<ctc::LabelSequence> targets(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    targets[i] = init.vocab.encode(textnorm::normalize(train[i].text));
    const long frames = init.encoder.frames(static_cast<long>(train[i].clip.samples.size()));
    if (frames == 0 || frames < min_frames(targets[i])) {
      ++result.skipped;
    } else {
      usable.push_back(i);
    }
  }
  if (usable.empty()) throw Error(Errc::EmptyManifest, "no training utterance has enough frames for its target");

  ModelParams params = init;
  Adam adam;
  Sampler sampler(usable.size(), options.seed);

  result.best = params;
  result.best_update = 0;
  result.best_wer = greedy_wer(params, valid);
  result.validation.emplace_back(0, result.best_wer);

  const auto skip_context = [](const std::string& name) { return is_context(name); };
  for (long u = 0; u < options.max_updates; ++u) {
    const bool frozen = u < options.freeze_updates;
    Gradients acc;
    double loss_sum = 0.0;
    std::size_t count = 0;
    for (int a = 0; a < options.accumulation_steps; ++a) {
      long samples = 0;
      std::size_t in_batch = 0;
      while (true) {
        const std::size_t idx = usable[sampler.next()];
        const auto& ex = train[idx];
        const auto seed = detail::derive_seed(options.seed, static_cast<std::uint64_t>(u),
                                              static_cast<std::uint64_t>(a), in_batch);
        auto r = ctc_objective(params, ex.clip, targets[idx], options.masks, seed);
        if (!std::isfinite(r.loss)) {
          throw Error(Errc::DivergedLoss, "non-finite loss at update " + std::to_string(u + 1));
        }
        add_into(acc, r.grads);
        loss_sum += r.loss;
        ++count;
        ++in_batch;
        samples += static_cast<long>(ex.clip.samples.size());
        if (samples >= options.max_samples_per_batch || in_batch >= usable.size()) break;
      }
    }
    const double inv = 1.0 / static_cast<double>(count);
    for (auto& [_, g] : acc) g *= inv;
    adam.step(params, acc, options.lr, frozen ? std::function<bool(const std::string&)>(skip_context) : nullptr);
    if (!params.all_finite()) throw Error(Errc::DivergedLoss, "parameters diverged at update " + std::to_string(u + 1));

    const LogEntry entry{u + 1, loss_sum * inv, options.lr, frozen};
    result.log.push_back(entry);
    if (progress) progress(entry);

    if ((u + 1) % options.eval_every == 0 || u + 1 == options.max_updates) {
      const double w = greedy_wer(params, valid);
      result.validation.emplace_back(u + 1, w);
      if (w < result.best_wer) {
        result.best_wer = w;
        result.best_update = u + 1;
        result.best = params;
      }
    }
  }
  return result;
}

PretrainResult pretrain(const ModelParams& init, std::span<const Example> data, const PretrainOptions& options,
                        double lr, long updates, std::uint64_t seed, const ProgressFn& progress) {
  if (data.empty()) throw Error(Errc::EmptyManifest, "pre-training set is empty");
  PretrainResult result{init, {}};
  Adam adam;
  Sampler sampler(data.size(), seed);
  const auto skip_head = [](const std::string& name) { return name.rfind("proj.", 0) == 0; };
  for (long u = 0; u < updates; ++u) {
    const auto& ex = data[sampler.next()];
    ObjectiveResult r;
    bool drawn = false;
    // Short clips may draw no mask; retry a few seeds before skipping.
    for (std::uint64_t attempt = 0; attempt < 8 && !drawn; ++attempt) {
      try {
        r = contrastive_objective(result.params, ex.clip, options,
                                  detail::derive_seed(seed, static_cast<std::uint64_t>(u), attempt));
        drawn = true;
      } catch (const Error& e) {
        if (e.code() != Errc::NoMaskedFrames) throw;
      }
    }
    if (!drawn) continue;
    if (!std::isfinite(r.loss)) throw Error(Errc::DivergedLoss, "non-finite loss at update " + std::to_string(u + 1));
    adam.step(result.params, r.grads, lr, skip_head);
    const LogEntry entry{u + 1, r.loss, lr, false};
    result.log.push_back(entry);
    if (progress) progress(entry);
  }
  return result;
}

std::string format_log(const std::vector<LogEntry>& log) {
  std::string out;
  for (const auto& e : log) {
    nlohmann::ordered_json j;
    j["update"] = e.update;
    j["loss"] = e.loss;
    j["lr"] = e.lr;
    j["frozen"] = e.frozen;
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace asrkit::toymodel
