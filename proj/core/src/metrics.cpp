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

#include "asrkit/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"

#include "asrkit/error.hpp"

namespace asrkit::metrics {
namespace {

struct Display {
  const char* tag;
  const char* name;
};

// Column order of the results table.
constexpr Display kColumns[] = {
    {"cetuc", "CETUC"}, {"cv", "CV"},     {"laps", "LaPS"},   {"mls", "MLS"},
    {"sid", "SID"},     {"tedx", "TEDx"}, {"voxforge", "VF"},
};

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", round_half_up(v, 3));
  return buf;
}

}  // namespace

double wer(const textnorm::TokenSequence& ref, const textnorm::TokenSequence& hyp) {
  if (ref.empty()) throw Error(Errc::EmptyReference, "WER is undefined for an empty reference");
  return static_cast<double>(edit_distance(ref, hyp)) / static_cast<double>(ref.size());
}

double cer(std::string_view ref, std::string_view hyp) {
  const std::u32string r = textnorm::decode_utf8(ref);
  const std::u32string h = textnorm::decode_utf8(hyp);
  if (r.find_first_not_of(U' ') == std::u32string::npos) {
    throw Error(Errc::EmptyReference, "CER is undefined for an empty reference");
  }
  const auto d = edit_distance(std::span<const char32_t>(r), std::span<const char32_t>(h));
  return static_cast<double>(d) / static_cast<double>(r.size());
}

double corpus_wer(std::span<const RefHyp> pairs) {
  std::size_t edits = 0;
  std::size_t words = 0;
  for (const auto& p : pairs) {
    edits += edit_distance(p.ref, p.hyp);
    words += p.ref.size();
  }
  if (words == 0) throw Error(Errc::EmptyCorpus, "no reference words to score");
  return static_cast<double>(edits) / static_cast<double>(words);
}

double macro_average(std::span<const double> subset_wers) {
  if (subset_wers.empty()) throw Error(Errc::InvalidArgument, "macro average of zero subsets");
  double sum = 0.0;
  for (double w : subset_wers) sum += w;
  return sum / static_cast<double>(subset_wers.size());
}

double round_half_up(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  // The nudge absorbs binary representation error of decimal ties
  // (0.1245 is stored as 0.12449999...).
  return std::floor(value * scale + 0.5 + 1e-9) / scale;
}

EvalReport evaluate(std::span<const ScoredPair> pairs) {
  struct Acc {
    std::size_t word_edits = 0, words = 0, char_edits = 0, chars = 0, utterances = 0;
  };
  std::map<std::string, Acc> acc;
  for (const auto& p : pairs) {
    const auto ref = textnorm::normalize(p.ref_text);
    const auto hyp = textnorm::normalize(p.hyp_text);
    auto& a = acc[p.subset];
    a.utterances += 1;
    a.word_edits += edit_distance(ref, hyp);
    a.words += ref.size();
    const auto rc = textnorm::decode_utf8(textnorm::join(ref));
    const auto hc = textnorm::decode_utf8(textnorm::join(hyp));
    a.char_edits += edit_distance(std::span<const char32_t>(rc), std::span<const char32_t>(hc));
    a.chars += rc.size();
  }
  EvalReport report;
  std::vector<double> wers;
  for (const auto& [subset, a] : acc) {
    if (a.words == 0) {
      throw Error(Errc::EmptyReference, "subset '" + subset + "' has no reference words");
    }
    SubsetScore s;
    s.wer = static_cast<double>(a.word_edits) / static_cast<double>(a.words);
    s.cer = static_cast<double>(a.char_edits) / static_cast<double>(a.chars);
    s.utterances = a.utterances;
    s.ref_words = a.words;
    report.per_subset.emplace(subset, s);
    wers.push_back(s.wer);
  }
  if (!wers.empty()) report.average = macro_average(wers);
  return report;
}

std::string subset_display_name(std::string_view tag) {
  for (const auto& c : kColumns) {
    if (tag == c.tag) return c.name;
  }
  return std::string(tag);
}

std::vector<std::string> table_order(const EvalReport& report) {
  std::vector<std::string> order;
  for (const auto& c : kColumns) {
    if (report.per_subset.count(c.tag)) order.emplace_back(c.tag);
  }
  for (const auto& [subset, _] : report.per_subset) {
    if (std::find(order.begin(), order.end(), subset) == order.end()) order.push_back(subset);
  }
  return order;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  auto& subsets = j["per_subset"];
  subsets = nlohmann::ordered_json::object();
  for (const auto& name : table_order(report)) {
    const auto& s = report.per_subset.at(name);
    subsets[name] = {{"wer", s.wer}, {"cer", s.cer}, {"utterances", s.utterances}, {"ref_words", s.ref_words}};
  }
  j["average"] = report.average;
  j["average_display"] = fixed3(report.average);
  return j.dump(2);
}

std::string report_to_table(const EvalReport& report) {
  const auto order = table_order(report);
  std::vector<std::string> header{"metric"};
  for (const auto& name : order) header.push_back(subset_display_name(name));
  header.emplace_back("AVG");

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> wer_row{"WER"}, cer_row{"CER"}, n_row{"utts"};
  for (const auto& name : order) {
    const auto& s = report.per_subset.at(name);
    wer_row.push_back(fixed3(s.wer));
    cer_row.push_back(fixed3(s.cer));
    n_row.push_back(std::to_string(s.utterances));
  }
  wer_row.push_back(fixed3(report.average));
  cer_row.emplace_back("-");
  n_row.emplace_back("-");
  rows = {header, wer_row, cer_row, n_row};

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream out;
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c == 0) {
        out << r[c] << std::string(width[c] - r[c].size(), ' ');
      } else {
        out << " | " << std::string(width[c] - r[c].size(), ' ') << r[c];
      }
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace asrkit::metrics
