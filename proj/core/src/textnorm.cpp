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

#include "asrkit/textnorm.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "asrkit/error.hpp"

namespace asrkit::textnorm {
namespace {

constexpr char32_t kReplacement = 0xFFFD;

bool is_space(char32_t c) {
  switch (c) {
    case U' ': case U'\t': case U'\n': case U'\r': case U'\f': case U'\v':
    case 0x00A0: case 0x1680: case 0x2028: case 0x2029: case 0x202F:
    case 0x205F: case 0x3000: case 0xFEFF:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200B;
  }
}

bool is_digit(char32_t c) { return c >= U'0' && c <= U'9'; }

char32_t to_lower(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 32;
  // Latin-1 uppercase block, skipping the multiplication sign.
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
  return c;
}

char32_t fold_apostrophe(char32_t c) {
  return (c == 0x2019 || c == 0x2018 || c == 0x02BC) ? U'\'' : c;
}

bool is_joiner(char32_t c) { return c == U'-' || c == U'\''; }

// Hyphens and apostrophes at word edges are punctuation.
void flush_word(std::u32string& word, TokenSequence& out, NormalizeStats& stats) {
  std::size_t b = 0;
  std::size_t e = word.size();
  while (b < e && is_joiner(word[b])) ++b;
  while (e > b && is_joiner(word[e - 1])) --e;
  stats.dropped_symbols += word.size() - (e - b);
  if (e > b) out.push_back(encode_utf8(std::u32string_view(word).substr(b, e - b)));
  word.clear();
}

void verbalize_digits(std::u32string_view digits, TokenSequence& out) {
  std::size_t first = 0;
  while (first + 1 < digits.size() && digits[first] == U'0') ++first;
  const auto significant = digits.substr(first);
  if (significant.size() <= 9) {
    std::int64_t value = 0;
    for (char32_t d : significant) value = value * 10 + (d - U'0');
    auto words = number_to_words_pt(value);
    out.insert(out.end(), words.begin(), words.end());
    return;
  }
  // Runs beyond the verbalizer's range are read digit by digit.
  for (char32_t d : digits) out.push_back(number_to_words_pt(d - U'0').front());
}

const std::array<const char*, 20> kUnits = {
    "zero", "um", "dois", "três", "quatro", "cinco", "seis", "sete", "oito", "nove",
    "dez", "onze", "doze", "treze", "quatorze", "quinze", "dezesseis", "dezessete",
    "dezoito", "dezenove"};
const std::array<const char*, 10> kTens = {
    "", "", "vinte", "trinta", "quarenta", "cinquenta", "sessenta", "setenta", "oitenta", "noventa"};
const std::array<const char*, 10> kHundreds = {
    "", "cento", "duzentos", "trezentos", "quatrocentos", "quinhentos", "seiscentos",
    "setecentos", "oitocentos", "novecentos"};

void below_hundred(int n, TokenSequence& out) {
  if (n < 20) {
    out.emplace_back(kUnits[n]);
    return;
  }
  out.emplace_back(kTens[n / 10]);
  if (n % 10 != 0) {
    out.emplace_back("e");
    out.emplace_back(kUnits[n % 10]);
  }
}

// n in [1, 999]
void below_thousand(int n, TokenSequence& out) {
  if (n == 100) {
    out.emplace_back("cem");
    return;
  }
  const int hundreds = n / 100;
  const int rest = n % 100;
  if (hundreds > 0) out.emplace_back(kHundreds[hundreds]);
  if (rest > 0) {
    if (hundreds > 0) out.emplace_back("e");
    below_hundred(rest, out);
  }
}

}  // namespace

const std::vector<char32_t>& character_inventory() {
  static const std::vector<char32_t> inventory = [] {
    std::vector<char32_t> v;
    for (char32_t c = U'a'; c <= U'z'; ++c) v.push_back(c);
    for (char32_t c : {0xE0, 0xE1, 0xE2, 0xE3, 0xE7, 0xE9, 0xEA, 0xED, 0xF3, 0xF4, 0xF5, 0xFA, 0xFC}) {
      v.push_back(c);
    }
    v.push_back(U'-');
    v.push_back(U'\'');
    return v;
  }();
  return inventory;
}

bool in_inventory(char32_t c) noexcept {
  if (c >= U'a' && c <= U'z') return true;
  switch (c) {
    case 0xE0: case 0xE1: case 0xE2: case 0xE3: case 0xE7: case 0xE9: case 0xEA:
    case 0xED: case 0xF3: case 0xF4: case 0xF5: case 0xFA: case 0xFC:
    case U'-': case U'\'':
      return true;
    default:
      return false;
  }
}

TokenSequence normalize(std::string_view text, NormalizeStats* stats_out) {
  NormalizeStats stats;
  const std::u32string input = decode_utf8(text);
  TokenSequence tokens;
  std::u32string word;
  std::size_t i = 0;
  while (i < input.size()) {
    const char32_t raw = input[i];
    if (raw == U'<') {
      std::size_t j = i + 1;
      while (j < input.size() && input[j] != U'>' && input[j] != U'<') ++j;
      if (j < input.size() && input[j] == U'>') {
        flush_word(word, tokens, stats);
        i = j + 1;
        continue;
      }
    }
    if (is_digit(raw)) {
      flush_word(word, tokens, stats);
      std::size_t j = i;
      while (j < input.size() && is_digit(input[j])) ++j;
      verbalize_digits(std::u32string_view(input).substr(i, j - i), tokens);
      i = j;
      continue;
    }
    const char32_t c = fold_apostrophe(to_lower(raw));
    if (in_inventory(c)) {
      word.push_back(c);
    } else {
      flush_word(word, tokens, stats);
      if (!is_space(c)) ++stats.dropped_symbols;
    }
    ++i;
  }
  flush_word(word, tokens, stats);
  if (stats_out) stats_out->dropped_symbols += stats.dropped_symbols;
  return tokens;
}

std::string normalize_sentence(std::string_view text) { return join(normalize(text)); }

std::string join(const TokenSequence& tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

TokenSequence split_whitespace(std::string_view text) {
  TokenSequence out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

TokenSequence number_to_words_pt(std::int64_t n) {
  if (n < 0 || n > kMaxVerbalized) {
    throw Error(Errc::OutOfRange, std::to_string(n) + " outside [0, 999999999]");
  }
  TokenSequence out;
  if (n == 0) {
    out.emplace_back("zero");
    return out;
  }
  const int groups[3] = {static_cast<int>(n / 1'000'000), static_cast<int>(n / 1000 % 1000),
                         static_cast<int>(n % 1000)};
  int last = 2;
  while (groups[last] == 0) --last;
  // "e" joins the final group only when it is below 100 or a round hundred.
  const bool join_last = groups[last] < 100 || groups[last] % 100 == 0;
  for (int g = 0; g <= last; ++g) {
    const int value = groups[g];
    if (value == 0) continue;
    if (!out.empty() && g == last && join_last) out.emplace_back("e");
    if (g == 0) {
      if (value == 1) {
        out.emplace_back("um");
        out.emplace_back("milhão");
      } else {
        below_thousand(value, out);
        out.emplace_back("milhões");
      }
    } else if (g == 1) {
      if (value != 1) below_thousand(value, out);
      out.emplace_back("mil");
    } else {
      below_thousand(value, out);
    }
  }
  return out;
}

std::u32string decode_utf8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    int len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    if (i + static_cast<std::size_t>(len) > text.size()) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    bool ok = true;
    for (int k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(text[i + static_cast<std::size_t>(k)]);
      if ((b & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    if (!ok) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(len);
  }
  return out;
}

void append_utf8(std::string& out, char32_t c) {
  if (c < 0x80) {
    out.push_back(static_cast<char>(c));
  } else if (c < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (c >> 6)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else if (c < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (c >> 12)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (c >> 18)));
    out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  }
}

std::string encode_utf8(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t c : text) append_utf8(out, c);
  return out;
}

}  // namespace asrkit::textnorm
