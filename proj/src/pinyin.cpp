// SPDX-License-Identifier: Apache-2.0
#include "pyabbrev/pinyin.hpp"

#include <fstream>

#include "pyabbrev/errors.hpp"
#include "pyabbrev/utf8.hpp"

namespace pyab {

namespace {

bool valid_syllable(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < 'a' || c > 'z') return false;
  return true;
}

std::vector<std::string> split_readings(const std::string& field) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= field.size()) {
    size_t comma = field.find(',', start);
    if (comma == std::string::npos) comma = field.size();
    out.push_back(field.substr(start, comma - start));
    start = comma + 1;
    if (comma == field.size()) break;
  }
  return out;
}

}  // namespace

void PinyinTable::add(char32_t character, std::vector<std::string> readings) {
  if (readings.empty())
    throw DataError("pinyin entry has no readings");
  for (const auto& r : readings)
    if (!valid_syllable(r))
      throw DataError("invalid pinyin syllable '" + r + "'");
  auto [it, inserted] = entries_.emplace(character, std::move(readings));
  if (!inserted)
    throw DataError("duplicate pinyin entry for character '" +
                    encode_utf8(character) + "'");
}

const std::vector<std::string>& PinyinTable::readings(char32_t character) const {
  auto it = entries_.find(character);
  if (it == entries_.end()) throw MissingReadingError(character);
  return it->second;
}

PinyinTable load_pinyin_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw DataError("cannot open pinyin table: " + path.string());

  PinyinTable table;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;

    const auto fail = [&](const std::string& what) -> DataError {
      return DataError(path.string() + ":" + std::to_string(line_no) + ": " + what);
    };

    const size_t tab = line.find('\t');
    if (tab == std::string::npos) throw fail("missing tab separator");

    const std::u32string key = decode_utf8(line.substr(0, tab));
    if (key.size() != 1) throw fail("key must be a single character");
    if (!is_cjk(key[0]))
      throw fail("key '" + encode_utf8(key[0]) + "' is not a CJK character");

    const std::string field = line.substr(tab + 1);
    if (field.empty()) throw fail("empty syllable list");
    auto readings = split_readings(field);
    for (const auto& r : readings)
      if (!valid_syllable(r))
        throw fail("invalid syllable '" + r + "' (lowercase ASCII letters only)");
    if (table.contains(key[0]))
      throw fail("duplicate entry for character '" + encode_utf8(key[0]) + "'");
    table.add(key[0], std::move(readings));
  }
  return table;
}

char initial_of(const PinyinTable& table, char32_t character) {
  return table.readings(character).front().front();
}

Abbreviation abbreviation_of(const PinyinTable& table, std::u32string_view word) {
  if (word.empty())
    throw std::invalid_argument("abbreviation_of: empty word");
  Abbreviation abbr;
  abbr.letters.reserve(word.size());
  for (char32_t ch : word) abbr.letters.push_back(initial_of(table, ch));
  return abbr;
}

std::vector<std::string> full_pinyin_of(const PinyinTable& table,
                                        std::u32string_view word) {
  if (word.empty())
    throw std::invalid_argument("full_pinyin_of: empty word");
  std::vector<std::string> out;
  out.reserve(word.size());
  for (char32_t ch : word) out.push_back(table.readings(ch).front());
  return out;
}

}  // namespace pyab
