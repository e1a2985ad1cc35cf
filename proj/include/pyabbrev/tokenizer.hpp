// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pyabbrev/corpus.hpp"

namespace pyab {

struct TokenSequence {
  std::vector<int> ids;

  bool operator==(const TokenSequence&) const = default;
  int size() const { return static_cast<int>(ids.size()); }
};

/**
 * Character-level vocabulary with a fixed special-token block:
 * [PAD] [UNK] [CLS] [SEP] [MASK] followed by the 26 letter-mask tokens
 * [LETTER_A]..[LETTER_Z] at contiguous ids. All other tokens are single
 * characters. Immutable after build; safe for concurrent readers.
 */
class Vocabulary {
public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;
  static constexpr int kMask = 4;
  static constexpr int kLetterA = 5;
  static constexpr int kNumSpecials = 31;  // 5 control + 26 letter masks

  // Vocabulary with the special block only.
  Vocabulary();

  int size() const { return static_cast<int>(id_to_token_.size()); }

  // Id of a token string, or -1 when absent.
  int id_of(std::string_view token) const;

  const std::string& token_of(int id) const;

  // Id of a single character, or [UNK] when out of vocabulary.
  int char_id(char32_t character) const;

  // Appends a single-character token. Throws DataError on duplicates.
  void add_character(char32_t character);

  bool is_special(int id) const { return id >= 0 && id < kNumSpecials; }
  bool is_letter_mask(int id) const {
    return id >= kLetterA && id < kLetterA + 26;
  }
  // Letter 'a'..'z' of a letter-mask id.
  char letter_of(int id) const;

  // The single character backing a non-special id.
  char32_t character_of(int id) const;

private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
  std::unordered_map<char32_t, int> char_to_id_;
};

/**
 * Builds a vocabulary over every character occurring at least `min_count`
 * times in the corpus. Ids are deterministic: specials first, then
 * characters by descending count, ties by codepoint.
 */
Vocabulary build_vocabulary(const std::vector<SegmentedSentence>& corpus,
                            int min_count);

// One id per character; out-of-vocabulary characters map to [UNK].
TokenSequence encode(const Vocabulary& vocab, std::u32string_view text);

// Inverse of encode for in-vocabulary text. Special tokens render as their
// bracketed names.
std::string decode(const Vocabulary& vocab, const TokenSequence& tokens);

// Reserved mask-token id for a pinyin initial. Throws std::invalid_argument
// outside 'a'..'z'.
int letter_mask_id(const Vocabulary& vocab, char letter);

// Plain ordered token list, one per line; 0-based line number = id.
void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path);
Vocabulary load_vocabulary(const std::filesystem::path& path);

}  // namespace pyab
