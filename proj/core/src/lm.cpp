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

#include "asrkit/lm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>

#include "asrkit/error.hpp"

namespace asrkit::lm {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  // from_chars for double is unavailable on some toolchains; strtod needs a
  // terminated buffer.
  std::string buf(s);
  char* end = nullptr;
  out = std::strtod(buf.c_str(), &end);
  return end == buf.c_str() + buf.size() && !buf.empty();
}

std::string format_value(double v) {
  if (v == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.7g", v);
  return buf;
}

[[noreturn]] void malformed(std::size_t line_no, const std::string& what) {
  throw Error(Errc::MalformedLine, "line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

NgramModel::NgramModel(int order) : order_(order) {
  if (order < 1) throw Error(Errc::InvalidArgument, "n-gram order must be >= 1");
  tables_.resize(static_cast<std::size_t>(order));
}

std::optional<WordId> NgramModel::find(std::string_view word) const {
  const auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

WordId NgramModel::add_word(std::string_view word) {
  const auto [it, inserted] = index_.emplace(std::string(word), static_cast<WordId>(words_.size()));
  if (inserted) {
    words_.emplace_back(word);
    if (word == kUnknown) unk_ = it->second;
  }
  return it->second;
}

WordId NgramModel::id_or_unk(std::string_view word) const {
  if (auto id = find(word)) return *id;
  if (!unk_) throw Error(Errc::NoUnkToken, "'" + std::string(word) + "' is out of vocabulary and the model has no <unk>");
  return *unk_;
}

const NgramEntry* NgramModel::lookup(const Ngram& ngram) const {
  if (ngram.empty() || static_cast<int>(ngram.size()) > order_) return nullptr;
  const auto& t = tables_[ngram.size() - 1];
  const auto it = t.find(ngram);
  return it == t.end() ? nullptr : &it->second;
}

void NgramModel::set(const Ngram& ngram, NgramEntry entry) {
  if (ngram.empty() || static_cast<int>(ngram.size()) > order_) {
    throw Error(Errc::InvalidArgument, "n-gram length outside model order");
  }
  tables_[ngram.size() - 1][ngram] = entry;
}

void NgramModel::check_prefixes() const {
  for (int k = 2; k <= order_; ++k) {
    for (const auto& [ngram, _] : table(k)) {
      const Ngram prefix(ngram.begin(), ngram.end() - 1);
      if (!lookup(prefix)) {
        std::string text;
        for (WordId w : ngram) text += words_[static_cast<std::size_t>(w)] + " ";
        throw Error(Errc::MalformedLine, "n-gram '" + text + "' has no listed prefix");
      }
    }
  }
}

NgramModel parse_arpa(std::istream& in) {
  std::string raw;
  std::size_t line_no = 0;
  bool seen_data = false;
  std::vector<std::size_t> declared;

  // Header: skip everything before \data\, then read "ngram k=N" lines.
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (!seen_data) {
      if (line == "\\data\\") seen_data = true;
      continue;
    }
    if (line.empty()) {
      if (!declared.empty()) break;
      continue;
    }
    if (line.rfind("ngram ", 0) != 0) {
      if (line.front() == '\\' && !declared.empty()) break;
      malformed(line_no, "expected 'ngram k=N' in \\data\\ section");
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) malformed(line_no, "missing '=' in ngram count");
    const auto k_text = trim(line.substr(6, eq - 6));
    const auto n_text = trim(line.substr(eq + 1));
    std::size_t k = 0;
    std::size_t n = 0;
    if (std::from_chars(k_text.data(), k_text.data() + k_text.size(), k).ec != std::errc{} ||
        std::from_chars(n_text.data(), n_text.data() + n_text.size(), n).ec != std::errc{}) {
      malformed(line_no, "unparsable ngram count");
    }
    if (k != declared.size() + 1) malformed(line_no, "ngram orders must be listed as 1, 2, ...");
    declared.push_back(n);
  }
  if (!seen_data) throw Error(Errc::MalformedLine, "no \\data\\ section");
  if (declared.empty()) throw Error(Errc::MalformedLine, "\\data\\ section declares no n-grams");

  NgramModel model(static_cast<int>(declared.size()));
  std::vector<std::size_t> listed(declared.size(), 0);
  int section = 0;  // current order, 0 = none
  bool ended = false;

  auto handle_section_header = [&](std::string_view line) {
    if (line == "\\end\\") {
      ended = true;
      return;
    }
    int k = 0;
    const auto dash = line.find("-grams:");
    if (line.size() < 3 || line.front() != '\\' || dash == std::string_view::npos ||
        std::from_chars(line.data() + 1, line.data() + dash, k).ec != std::errc{}) {
      malformed(line_no, "unrecognized section header '" + std::string(line) + "'");
    }
    if (k < 1 || k > model.order()) malformed(line_no, "section for undeclared order " + std::to_string(k));
    section = k;
  };

  // The header loop may have stopped on a section line.
  if (const auto pending = trim(raw); !pending.empty() && pending.front() == '\\' && pending != "\\data\\") {
    handle_section_header(pending);
  }

  while (!ended && std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '\\') {
      handle_section_header(line);
      continue;
    }
    if (section == 0) malformed(line_no, "n-gram outside any section");
    const auto fields = split_fields(line);
    const auto k = static_cast<std::size_t>(section);
    if (fields.size() != k + 1 && fields.size() != k + 2) {
      malformed(line_no, "expected " + std::to_string(k + 1) + " or " + std::to_string(k + 2) + " fields");
    }
    NgramEntry entry;
    if (!parse_double(fields[0], entry.log10_prob)) malformed(line_no, "bad probability");
    if (fields.size() == k + 2) {
      if (section == model.order()) malformed(line_no, "backoff weight on highest-order n-gram");
      if (!parse_double(fields[k + 1], entry.log10_backoff)) malformed(line_no, "bad backoff weight");
    }
    Ngram ngram;
    ngram.reserve(k);
    for (std::size_t i = 1; i <= k; ++i) {
      if (section == 1) {
        ngram.push_back(model.add_word(fields[i]));
      } else {
        const auto id = model.find(fields[i]);
        if (!id) malformed(line_no, "word '" + std::string(fields[i]) + "' is not a listed unigram");
        ngram.push_back(*id);
      }
    }
    if (model.lookup(ngram)) malformed(line_no, "duplicate n-gram");
    model.set(ngram, entry);
    ++listed[k - 1];
  }
  if (!ended) throw Error(Errc::MissingEnd, "stream ended before \\end\\");
  for (std::size_t k = 0; k < declared.size(); ++k) {
    if (listed[k] != declared[k]) {
      throw Error(Errc::CountMismatch, "header declares " + std::to_string(declared[k]) + " " +
                                           std::to_string(k + 1) + "-grams but " + std::to_string(listed[k]) +
                                           " are listed");
    }
  }
  model.check_prefixes();
  return model;
}

NgramModel parse_arpa(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_arpa(in);
}

NgramModel load_arpa(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  return parse_arpa(in);
}

std::string serialize_arpa(const NgramModel& model, std::span<const std::string> preamble) {
  std::string out;
  for (const auto& line : preamble) {
    out += line;
    out += '\n';
  }
  if (!preamble.empty()) out += '\n';
  out += "\\data\\\n";
  for (int k = 1; k <= model.order(); ++k) {
    out += "ngram " + std::to_string(k) + "=" + std::to_string(model.table(k).size()) + "\n";
  }
  const auto& words = model.words();
  for (int k = 1; k <= model.order(); ++k) {
    out += "\n\\" + std::to_string(k) + "-grams:\n";
    std::vector<std::pair<std::vector<std::string_view>, const NgramEntry*>> rows;
    rows.reserve(model.table(k).size());
    for (const auto& [ngram, entry] : model.table(k)) {
      std::vector<std::string_view> tokens;
      for (WordId w : ngram) tokens.emplace_back(words[static_cast<std::size_t>(w)]);
      rows.emplace_back(std::move(tokens), &entry);
    }
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [tokens, entry] : rows) {
      out += format_value(entry->log10_prob);
      out += '\t';
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i];
      }
      if (k < model.order()) {
        out += '\t';
        out += format_value(entry->log10_backoff);
      }
      out += '\n';
    }
  }
  out += "\n\\end\\\n";
  return out;
}

void save_arpa(const std::filesystem::path& path, const NgramModel& model, std::span<const std::string> preamble) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << serialize_arpa(model, preamble);
}

double score_word(const NgramModel& model, std::span<const WordId> history, WordId word) {
  const auto keep = std::min<std::size_t>(history.size(), static_cast<std::size_t>(model.order() - 1));
  Ngram context(history.end() - static_cast<std::ptrdiff_t>(keep), history.end());
  double backoff = 0.0;
  while (true) {
    Ngram ngram = context;
    ngram.push_back(word);
    if (const auto* e = model.lookup(ngram)) return backoff + e->log10_prob;
    if (context.empty()) {
      throw Error(Errc::InvalidArgument, "word id " + std::to_string(word) + " has no unigram");
    }
    if (const auto* h = model.lookup(context)) backoff += h->log10_backoff;
    context.erase(context.begin());
  }
}

double score_word(const NgramModel& model, std::span<const std::string> history, std::string_view word) {
  std::vector<WordId> ids;
  ids.reserve(history.size());
  for (const auto& h : history) ids.push_back(model.id_or_unk(h));
  return score_word(model, ids, model.id_or_unk(word));
}

double score_sentence(const NgramModel& model, const textnorm::TokenSequence& tokens) {
  std::vector<WordId> history{model.id_or_unk(kSentenceBegin)};
  double total = 0.0;
  for (const auto& t : tokens) {
    const WordId w = model.id_or_unk(t);
    total += score_word(model, history, w);
    history.push_back(w);
  }
  total += score_word(model, history, model.id_or_unk(kSentenceEnd));
  return total;
}

double perplexity(const NgramModel& model, std::span<const textnorm::TokenSequence> corpus) {
  if (corpus.empty()) throw Error(Errc::EmptyCorpus, "perplexity of an empty corpus");
  double total = 0.0;
  std::size_t events = 0;
  for (const auto& sentence : corpus) {
    total += score_sentence(model, sentence);
    events += sentence.size() + 1;
  }
  return std::pow(10.0, -total / static_cast<double>(events));
}

}  // namespace asrkit::lm
