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
#include <string>
#include <string_view>
#include <vector>

namespace asrkit::textnorm {

/// Lowercase tokens over the character inventory below. May be empty.
using TokenSequence = std::vector<std::string>;

inline constexpr std::int64_t kMaxVerbalized = 999'999'999;

/// Letters a-z, the Portuguese diacritics (à á â ã ç é ê í ó ô õ ú ü),
/// hyphen and apostrophe, in the order used to build CTC vocabularies.
const std::vector<char32_t>& character_inventory();
bool in_inventory(char32_t c) noexcept;

struct NormalizeStats {
  std::size_t dropped_symbols = 0;  // code points removed as punctuation/unknown
};

/// Lowercases, strips <tags>, verbalizes digit runs, removes everything
/// outside the inventory and splits on whitespace. Hyphens and apostrophes
/// survive only inside a word.
TokenSequence normalize(std::string_view text, NormalizeStats* stats = nullptr);

/// normalize() joined by single spaces: the canonical sentence key used for
/// leakage comparison and LM corpora.
std::string normalize_sentence(std::string_view text);

std::string join(const TokenSequence& tokens, std::string_view sep = " ");
TokenSequence split_whitespace(std::string_view text);

/// Brazilian Portuguese cardinal, masculine forms. Throws OutOfRange outside
/// [0, 999'999'999].
TokenSequence number_to_words_pt(std::int64_t n);

// UTF-8 helpers. Invalid sequences decode to U+FFFD.
std::u32string decode_utf8(std::string_view text);
std::string encode_utf8(std::u32string_view text);
void append_utf8(std::string& out, char32_t c);

}  // namespace asrkit::textnorm
