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


#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "asrkit/error.hpp"
#include "asrkit/metrics.hpp"
#include "asrkit/random.hpp"
#include "oracles.hpp"

using namespace asrkit;
using textnorm::TokenSequence;

namespace {

std::vector<int> random_seq(Rng& rng, int max_len, int alphabet) {
  std::vector<int> s(rng.below(static_cast<std::uint64_t>(max_len + 1)));
  for (auto& x : s) x = static_cast<int>(rng.below(static_cast<std::uint64_t>(alphabet)));
  return s;
}

}  // namespace

TEST_CASE("edit distance examples") {
  const TokenSequence abc{"a", "b", "c"};
  CHECK(metrics::edit_distance(abc, abc) == 0);
  CHECK(metrics::edit_distance(TokenSequence{}, abc) == 3);
  CHECK(metrics::edit_distance(abc, TokenSequence{"a", "x", "c"}) == 1);
}

TEST_CASE("edit distance equals the recursion for short sequences") {
  const auto seqs = oracle::all_sequences(3, 4);
  for (const auto& a : seqs) {
    for (const auto& b : seqs) {
      REQUIRE(metrics::edit_distance(a, b) == oracle::recursive_edit_distance(a, b));
    }
  }
}

TEST_CASE("edit distance is a metric") {
  Rng rng(5);
  for (int trial = 0; trial < 3000; ++trial) {
    const auto a = random_seq(rng, 6, 3);
    const auto b = random_seq(rng, 6, 3);
    const auto c = random_seq(rng, 6, 3);
    const auto ab = metrics::edit_distance(a, b);
    CHECK(ab == metrics::edit_distance(b, a));
    CHECK((ab == 0) == (a == b));
    CHECK(metrics::edit_distance(a, c) <= ab + metrics::edit_distance(b, c));
    CHECK(ab <= std::max(a.size(), b.size()));
    CHECK(ab >= (a.size() > b.size() ? a.size() - b.size() : b.size() - a.size()));
  }
}

TEST_CASE("wer") {
  const TokenSequence ref{"um", "dois", "três", "quatro"};
  CHECK(metrics::wer(ref, ref) == 0.0);
  CHECK(metrics::wer(ref, {"um", "dois", "três"}) == 0.25);
  CHECK(metrics::wer({"a", "b", "c"}, {"d", "e", "f", "g", "h", "i"}) == 2.0);
  CHECK_THROWS_AS(metrics::wer({}, ref), Error);
}

TEST_CASE("cer") {
  CHECK(metrics::cer("casa", "casa") == 0.0);
  CHECK(metrics::cer("ab", "ac") == 0.5);
  CHECK(metrics::cer("casa", "caza") == 0.25);
  CHECK(metrics::cer("a b", "ab") == doctest::Approx(1.0 / 3.0));
  CHECK(metrics::cer("ação", "acao") == 0.5);
  CHECK_THROWS_AS(metrics::cer("", "x"), Error);
  CHECK_THROWS_AS(metrics::cer("  ", "x"), Error);
}

TEST_CASE("corpus wer pools edits") {
  const TokenSequence four{"a", "b", "c", "d"};
  std::vector<metrics::RefHyp> one{{four, {"a", "b", "c"}}};
  CHECK(metrics::corpus_wer(one) == metrics::wer(four, {"a", "b", "c"}));
  std::vector<metrics::RefHyp> two{{four, {"a", "b", "c"}}, {four, {"a", "x", "c", "d"}}};
  CHECK(metrics::corpus_wer(two) == 0.25);

  const TokenSequence nine{"a", "b", "c", "d", "e", "f", "g", "h", "i"};
  std::vector<metrics::RefHyp> skewed{{{"a"}, {"b"}}, {nine, nine}};
  CHECK(metrics::corpus_wer(skewed) == doctest::Approx(0.1));
  const double mean = (metrics::wer({"a"}, {"b"}) + metrics::wer(nine, nine)) / 2;
  CHECK(mean == 0.5);

  std::vector<metrics::RefHyp> empty{{{}, {"a"}}};
  try {
    metrics::corpus_wer(empty);
    FAIL("expected EmptyCorpus");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EmptyCorpus);
  }
}

TEST_CASE("macro average of printed rows") {
  const std::vector<double> all_data{0.052, 0.140, 0.074, 0.117, 0.121, 0.245, 0.118};
  const std::vector<double> five_gram{0.033, 0.094, 0.043, 0.123, 0.111, 0.210, 0.123};
  const std::vector<double> baseline{0.307, 0.444, 0.361, 0.442, 0.363, 0.552, 0.467};
  CHECK(metrics::round_half_up(metrics::macro_average(all_data), 3) == doctest::Approx(0.124).epsilon(1e-12));
  CHECK(metrics::round_half_up(metrics::macro_average(five_gram), 3) == doctest::Approx(0.105).epsilon(1e-12));
  CHECK(metrics::round_half_up(metrics::macro_average(baseline), 3) == doctest::Approx(0.419).epsilon(1e-12));
  CHECK_THROWS_AS(metrics::macro_average({}), Error);
}

TEST_CASE("half-up rounding of decimal ties") {
  CHECK(metrics::round_half_up(0.1245, 3) == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(metrics::round_half_up(0.1244, 3) == doctest::Approx(0.124).epsilon(1e-12));
  CHECK(metrics::round_half_up(2.5, 0) == 3.0);
  CHECK(metrics::round_half_up(0.0, 3) == 0.0);
}

TEST_CASE("evaluate normalizes and averages subsets") {
  std::vector<metrics::ScoredPair> pairs{
      {"cv", "Olá, mundo!", "olá mundo"},
      {"cv", "tenho 21 anos", "tenho vinte um anos"},
      {"cetuc", "a b c d", "a b c"},
      {"custom", "x", "y"},
  };
  const auto r = metrics::evaluate(pairs);
  REQUIRE(r.per_subset.size() == 3);
  CHECK(r.per_subset.at("cv").wer == doctest::Approx(1.0 / 7.0));
  CHECK(r.per_subset.at("cv").utterances == 2);
  CHECK(r.per_subset.at("cv").ref_words == 7);
  CHECK(r.per_subset.at("cetuc").wer == 0.25);
  CHECK(r.per_subset.at("cetuc").cer == doctest::Approx(2.0 / 7.0));
  CHECK(r.per_subset.at("custom").wer == 1.0);
  double sum = 0;
  for (const auto& [_, s] : r.per_subset) {
    CHECK(s.wer >= 0);
    CHECK(s.cer >= 0);
    sum += s.wer;
  }
  CHECK(std::abs(r.average - sum / 3) <= 1e-12);

  CHECK(metrics::table_order(r) == std::vector<std::string>{"cetuc", "cv", "custom"});
  CHECK(metrics::subset_display_name("voxforge") == "VF");
  CHECK(metrics::subset_display_name("tedx") == "TEDx");
  CHECK(metrics::subset_display_name("other") == "other");

  const auto j = nlohmann::json::parse(metrics::report_to_json(r));
  CHECK(j["per_subset"]["cetuc"]["wer"].get<double>() == 0.25);
  CHECK(j["average_display"] == "0.464");

  const auto table = metrics::report_to_table(r);
  CHECK(table.find("CETUC") < table.find("CV"));
  CHECK(table.find("AVG") != std::string::npos);
  CHECK(table.find("0.464") != std::string::npos);

  std::vector<metrics::ScoredPair> empty_ref{{"cv", "!!!", "a"}};
  CHECK_THROWS_AS(metrics::evaluate(empty_ref), Error);
}
