// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pyab {

/**
 * Maps Chinese characters to their pinyin readings (tone marks stripped,
 * lowercase ASCII). The first listed reading is the default one used for
 * masking and evaluation. Immutable after load; safe for concurrent readers.
 */
class PinyinTable {
public:
  PinyinTable() = default;

  // Throws DataError on duplicate characters or invalid syllables.
  void add(char32_t character, std::vector<std::string> readings);

  bool contains(char32_t character) const {
    return entries_.find(character) != entries_.end();
  }

  // All readings, default first. Throws MissingReadingError if absent.
  const std::vector<std::string>& readings(char32_t character) const;

  size_t size() const { return entries_.size(); }

private:
  std::unordered_map<char32_t, std::vector<std::string>> entries_;
};

// A word rendered as the first letters of its characters' pinyin,
// one letter in 'a'..'z' per character.
struct Abbreviation {
  std::string letters;

  bool operator==(const Abbreviation&) const = default;
};

/**
 * Loads a table from TSV: `<char>\t<syllable>[,<syllable>...]` per line,
 * UTF-8, '#'-prefixed comment lines and blank lines ignored. Throws
 * DataError naming the line number on any malformed line.
 */
PinyinTable load_pinyin_table(const std::filesystem::path& path);

// First letter of the default reading. Throws MissingReadingError.
char initial_of(const PinyinTable& table, char32_t character);

// One initial per character. Throws on empty word or missing reading.
Abbreviation abbreviation_of(const PinyinTable& table, std::u32string_view word);

// Default reading of each character, in order.
std::vector<std::string> full_pinyin_of(const PinyinTable& table,
                                        std::u32string_view word);

}  // namespace pyab
