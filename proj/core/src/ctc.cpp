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

#include "asrkit/ctc.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>

#include "asrkit/error.hpp"

namespace asrkit::ctc {

Vocabulary::Vocabulary(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    const auto& s = symbols_[i];
    if (s.empty()) throw Error(Errc::InvalidArgument, "empty vocabulary symbol");
    if (!index_.emplace(s, static_cast<int>(i)).second) {
      throw Error(Errc::InvalidArgument, "duplicate vocabulary symbol '" + s + "'");
    }
  }
  const auto b = index_.find(std::string(kBlank));
  const auto d = index_.find(std::string(kWordDelimiter));
  if (b == index_.end()) throw Error(Errc::InvalidArgument, "vocabulary lacks <blank>");
  if (d == index_.end()) throw Error(Errc::InvalidArgument, "vocabulary lacks the '|' delimiter");
  blank_ = b->second;
  delimiter_ = d->second;
}

Vocabulary Vocabulary::portuguese() {
  std::vector<std::string> symbols{std::string(kBlank), std::string(kWordDelimiter)};
  for (char32_t c : textnorm::character_inventory()) {
    std::string s;
    textnorm::append_utf8(s, c);
    symbols.push_back(std::move(s));
  }
  return Vocabulary(std::move(symbols));
}

std::optional<int> Vocabulary::index(std::string_view symbol) const {
  const auto it = index_.find(std::string(symbol));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

LabelSequence Vocabulary::encode(const textnorm::TokenSequence& words) const {
  LabelSequence labels;
  for (std::size_t w = 0; w < words.size(); ++w) {
    if (w) labels.push_back(delimiter_);
    for (char32_t c : textnorm::decode_utf8(words[w])) {
      std::string s;
      textnorm::append_utf8(s, c);
      const auto idx = index(s);
      if (!idx || *idx == blank_ || *idx == delimiter_) {
        throw Error(Errc::LabelOutOfVocab, "character '" + s + "' in '" + words[w] + "' has no symbol");
      }
      labels.push_back(*idx);
    }
  }
  return labels;
}

textnorm::TokenSequence Vocabulary::words(const LabelSequence& labels) const {
  textnorm::TokenSequence out;
  std::string current;
  for (int l : labels) {
    if (l == delimiter_) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else if (l != blank_) {
      current += symbol(l);
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

Vocabulary read_vocabulary(std::istream& in) {
  std::vector<std::string> symbols;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) symbols.push_back(line);
  }
  return Vocabulary(std::move(symbols));
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  return read_vocabulary(in);
}

void save_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  for (const auto& s : vocab.symbols()) out << s << '\n';
}

void LogProbLattice::validate(double tolerance) const {
  if (frames.cols() != static_cast<Eigen::Index>(vocab.size())) {
    throw Error(Errc::MalformedLattice, "lattice width " + std::to_string(frames.cols()) +
                                            " differs from vocabulary size " + std::to_string(vocab.size()));
  }
  for (Eigen::Index t = 0; t < frames.rows(); ++t) {
    const double z = logsumexp(frames.row(t));
    if (!(std::abs(z) <= tolerance)) {
      throw Error(Errc::MalformedLattice, "frame " + std::to_string(t) + " log-sum-exps to " + std::to_string(z));
    }
  }
}

LogProbLattice lattice_from_logits(const Matrix& logits, Vocabulary vocab) {
  return {log_softmax_rows(logits), std::move(vocab)};
}

LogProbLattice read_lattice(std::istream& in, const Vocabulary& vocab) {
  long long t = -1;
  long long v = -1;
  if (!(in >> t >> v) || t < 0 || v <= 0) throw Error(Errc::MalformedLattice, "bad 'T V' header");
  LogProbLattice lattice{Matrix(t, v), vocab};
  std::string token;
  for (long long i = 0; i < t; ++i) {
    for (long long j = 0; j < v; ++j) {
      if (!(in >> token)) throw Error(Errc::MalformedLattice, "lattice ends early");
      char* end = nullptr;
      const double x = std::strtod(token.c_str(), &end);
      if (end != token.c_str() + token.size()) throw Error(Errc::MalformedLattice, "bad value '" + token + "'");
      lattice.frames(i, j) = x;
    }
  }
  if (in >> token) throw Error(Errc::MalformedLattice, "trailing data after " + std::to_string(t) + " frames");
  lattice.validate();
  return lattice;
}

LogProbLattice load_lattice(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  return read_lattice(in, vocab);
}

std::string format_lattice(const LogProbLattice& lattice) {
  std::string out = std::to_string(lattice.frames.rows()) + " " + std::to_string(lattice.frames.cols()) + "\n";
  char buf[40];
  for (Eigen::Index t = 0; t < lattice.frames.rows(); ++t) {
    for (Eigen::Index j = 0; j < lattice.frames.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", lattice.frames(t, j));
      if (j) out += ' ';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void save_lattice(const std::filesystem::path& path, const LogProbLattice& lattice) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << format_lattice(lattice);
}

namespace {

void check_target(const LogProbLattice& lattice, const LabelSequence& target) {
  const auto v = static_cast<int>(lattice.frames.cols());
  for (int l : target) {
    if (l < 0 || l >= v || l == lattice.vocab.blank()) {
      throw Error(Errc::LabelOutOfVocab, "label " + std::to_string(l) + " is not a non-blank symbol");
    }
  }
}

// Minimum frames: one per label plus a blank between equal neighbours.
std::size_t required_frames(const LabelSequence& target) {
  std::size_t need = target.size();
  for (std::size_t i = 1; i < target.size(); ++i) need += target[i] == target[i - 1] ? 1 : 0;
  return need;
}

// Extended sequence with blanks interleaved: b l1 b l2 ... lL b.
std::vector<int> extend(const LabelSequence& target, int blank) {
  std::vector<int> ext(2 * target.size() + 1, blank);
  for (std::size_t i = 0; i < target.size(); ++i) ext[2 * i + 1] = target[i];
  return ext;
}

bool can_skip(const std::vector<int>& ext, std::size_t s, int blank) {
  return s >= 2 && ext[s] != blank && ext[s] != ext[s - 2];
}

Matrix forward(const Matrix& lp, const std::vector<int>& ext, int blank) {
  const Eigen::Index T = lp.rows();
  const auto S = static_cast<Eigen::Index>(ext.size());
  Matrix alpha = Matrix::Constant(T, S, kLogZero);
  alpha(0, 0) = lp(0, ext[0]);
  if (S > 1) alpha(0, 1) = lp(0, ext[1]);
  for (Eigen::Index t = 1; t < T; ++t) {
    for (Eigen::Index s = 0; s < S; ++s) {
      double a = alpha(t - 1, s);
      if (s >= 1) a = logaddexp(a, alpha(t - 1, s - 1));
      if (can_skip(ext, static_cast<std::size_t>(s), blank)) a = logaddexp(a, alpha(t - 1, s - 2));
      alpha(t, s) = a == kLogZero ? kLogZero : a + lp(t, ext[static_cast<std::size_t>(s)]);
    }
  }
  return alpha;
}

// beta(t, s): log probability of completing the target from state s at t,
// excluding the emission at t.
Matrix backward(const Matrix& lp, const std::vector<int>& ext, int blank) {
  const Eigen::Index T = lp.rows();
  const auto S = static_cast<Eigen::Index>(ext.size());
  Matrix beta = Matrix::Constant(T, S, kLogZero);
  beta(T - 1, S - 1) = 0.0;
  if (S > 1) beta(T - 1, S - 2) = 0.0;
  for (Eigen::Index t = T - 2; t >= 0; --t) {
    for (Eigen::Index s = 0; s < S; ++s) {
      double b = beta(t + 1, s) + lp(t + 1, ext[static_cast<std::size_t>(s)]);
      if (s + 1 < S) b = logaddexp(b, beta(t + 1, s + 1) + lp(t + 1, ext[static_cast<std::size_t>(s + 1)]));
      if (s + 2 < S && can_skip(ext, static_cast<std::size_t>(s + 2), blank)) {
        b = logaddexp(b, beta(t + 1, s + 2) + lp(t + 1, ext[static_cast<std::size_t>(s + 2)]));
      }
      beta(t, s) = b;
    }
  }
  return beta;
}

double total_log_prob(const Matrix& alpha) {
  const Eigen::Index T = alpha.rows();
  const Eigen::Index S = alpha.cols();
  double p = alpha(T - 1, S - 1);
  if (S > 1) p = logaddexp(p, alpha(T - 1, S - 2));
  return p;
}

}  // namespace

double ctc_loss(const LogProbLattice& lattice, const LabelSequence& target) {
  check_target(lattice, target);
  const auto T = static_cast<std::size_t>(lattice.frames.rows());
  if (T == 0) return target.empty() ? 0.0 : std::numeric_limits<double>::infinity();
  if (required_frames(target) > T) return std::numeric_limits<double>::infinity();
  const auto ext = extend(target, lattice.vocab.blank());
  const double logp = total_log_prob(forward(lattice.frames, ext, lattice.vocab.blank()));
  return -logp;
}

LossGradient ctc_loss_and_gradient(const LogProbLattice& lattice, const LabelSequence& target) {
  check_target(lattice, target);
  const Matrix& lp = lattice.frames;
  const Eigen::Index T = lp.rows();
  const Eigen::Index V = lp.cols();
  if (T == 0) {
    if (!target.empty()) throw Error(Errc::InfeasibleTarget, "non-empty target on an empty lattice");
    return {0.0, Matrix(0, V)};
  }
  if (required_frames(target) > static_cast<std::size_t>(T)) {
    throw Error(Errc::InfeasibleTarget, "target needs " + std::to_string(required_frames(target)) +
                                            " frames, lattice has " + std::to_string(T));
  }
  const int blank = lattice.vocab.blank();
  const auto ext = extend(target, blank);
  const Matrix alpha = forward(lp, ext, blank);
  const Matrix beta = backward(lp, ext, blank);
  const double logp = total_log_prob(alpha);
  if (logp == kLogZero) throw Error(Errc::InfeasibleTarget, "target has zero probability under the lattice");

  LossGradient out{-logp, Matrix(T, V)};
  Matrix log_post = Matrix::Constant(T, V, kLogZero);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (std::size_t s = 0; s < ext.size(); ++s) {
      const auto si = static_cast<Eigen::Index>(s);
      log_post(t, ext[s]) = logaddexp(log_post(t, ext[s]), alpha(t, si) + beta(t, si));
    }
  }
  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index k = 0; k < V; ++k) {
      out.gradient(t, k) = std::exp(lp(t, k)) - std::exp(log_post(t, k) - logp);
    }
  }
  return out;
}

Matrix ctc_gradient(const LogProbLattice& lattice, const LabelSequence& target) {
  return ctc_loss_and_gradient(lattice, target).gradient;
}

LabelSequence greedy_decode(const LogProbLattice& lattice) {
  LabelSequence out;
  const int blank = lattice.vocab.blank();
  int prev = -1;
  for (Eigen::Index t = 0; t < lattice.frames.rows(); ++t) {
    int best = 0;
    for (Eigen::Index k = 1; k < lattice.frames.cols(); ++k) {
      if (lattice.frames(t, k) > lattice.frames(t, best)) best = static_cast<int>(k);
    }
    if (best != blank && best != prev) out.push_back(best);
    prev = best;
  }
  return out;
}

}  // namespace asrkit::ctc
