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


#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "doctest.h"

#include "asrkit/error.hpp"
#include "asrkit/random.hpp"
#include "asrkit/textnorm.hpp"

using namespace asrkit;
using textnorm::TokenSequence;

namespace {

std::map<std::int64_t, std::string> load_number_table() {
  std::ifstream in(std::string(ASRKIT_TEST_DATA_DIR) + "/numbers_pt.tsv");
  REQUIRE(in);
  std::map<std::int64_t, std::string> table;
  std::string line;
  while (std::getline(in, line)) {
    const auto tab = line.find('\t');
    table[std::stoll(line.substr(0, tab))] = line.substr(tab + 1);
  }
  return table;
}

}  // namespace

TEST_CASE("normalize examples") {
  CHECK(textnorm::normalize("Olá, mundo!") == TokenSequence{"olá", "mundo"});
  CHECK(textnorm::normalize("<i>teste</i>") == TokenSequence{"teste"});
  CHECK(textnorm::normalize("tenho 21 anos") == TokenSequence{"tenho", "vinte", "e", "um", "anos"});
  CHECK(textnorm::normalize("") == TokenSequence{});
  CHECK(textnorm::normalize("?!... ,;") == TokenSequence{});
  CHECK(textnorm::normalize("ÁGUA É VIDA") == TokenSequence{"água", "é", "vida"});
  CHECK(textnorm::normalize("guarda-chuva d'água") == TokenSequence{"guarda-chuva", "d'água"});
  CHECK(textnorm::normalize("d’água") == TokenSequence{"d'água"});
  CHECK(textnorm::normalize("- oi -") == TokenSequence{"oi"});
  CHECK(textnorm::normalize("a<b") == TokenSequence{"a", "b"});
  CHECK(textnorm::normalize("ano2021") == TokenSequence{"ano", "dois", "mil", "e", "vinte", "e", "um"});
  CHECK(textnorm::normalize("007") == TokenSequence{"sete"});
}

TEST_CASE("dropped symbols are counted") {
  textnorm::NormalizeStats stats;
  textnorm::normalize("Olá, mundo!", &stats);
  CHECK(stats.dropped_symbols == 2);
  textnorm::normalize("ß", &stats);
  CHECK(stats.dropped_symbols == 3);
}

TEST_CASE("number table") {
  const auto table = load_number_table();
  CHECK(table.size() >= 210);
  for (const auto& [n, words] : table) {
    CAPTURE(n);
    CHECK(textnorm::join(textnorm::number_to_words_pt(n)) == words);
  }
  CHECK(textnorm::number_to_words_pt(1100) == TokenSequence{"mil", "e", "cem"});
  CHECK(textnorm::number_to_words_pt(0) == TokenSequence{"zero"});
}

TEST_CASE("number range") {
  CHECK_THROWS_AS(textnorm::number_to_words_pt(-1), Error);
  CHECK_THROWS_AS(textnorm::number_to_words_pt(1'000'000'000), Error);
  try {
    textnorm::number_to_words_pt(textnorm::kMaxVerbalized + 1);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::OutOfRange);
  }
  CHECK_FALSE(textnorm::number_to_words_pt(textnorm::kMaxVerbalized).empty());
}

TEST_CASE("number words are injective below 100000") {
  std::set<std::string> seen;
  for (std::int64_t n = 0; n < 100000; ++n) {
    const auto words = textnorm::number_to_words_pt(n);
    for (const auto& w : words) {
      for (char32_t c : textnorm::decode_utf8(w)) REQUIRE(textnorm::in_inventory(c));
    }
    REQUIRE(seen.insert(textnorm::join(words)).second);
  }
}

TEST_CASE("normalize is idempotent and stays in the inventory") {
  const std::u32string alphabet = U"abcXYZ áÉçõü-' 0123456789,.!?<>/\t\nß’";
  Rng rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    std::u32string s;
    const auto len = rng.below(40);
    for (std::uint64_t i = 0; i < len; ++i) s.push_back(alphabet[rng.below(alphabet.size())]);
    const auto once = textnorm::normalize(textnorm::encode_utf8(s));
    CHECK(textnorm::normalize(textnorm::join(once)) == once);
    for (const auto& tok : once) {
      CHECK_FALSE(tok.empty());
      for (char32_t c : textnorm::decode_utf8(tok)) CHECK(textnorm::in_inventory(c));
    }
  }
}

TEST_CASE("inventory") {
  const auto& inv = textnorm::character_inventory();
  CHECK(inv.size() == 26 + 13 + 2);
  for (char32_t c : inv) CHECK(textnorm::in_inventory(c));
  CHECK_FALSE(textnorm::in_inventory(U'A'));
  CHECK_FALSE(textnorm::in_inventory(U'5'));
  CHECK_FALSE(textnorm::in_inventory(U' '));
}

TEST_CASE("utf8 helpers") {
  const std::string s = "olá ü ’";
  CHECK(textnorm::encode_utf8(textnorm::decode_utf8(s)) == s);
  CHECK(textnorm::split_whitespace("  a \t b\n") == TokenSequence{"a", "b"});
  CHECK(textnorm::join({"a", "b"}, "|") == "a|b");
}
