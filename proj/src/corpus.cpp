// SPDX-License-Identifier: Apache-2.0
#include "pyabbrev/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "pyabbrev/errors.hpp"
#include "pyabbrev/utf8.hpp"

namespace pyab {

std::u32string SegmentedSentence::text() const {
  std::u32string out;
  for (const auto& w : words) out += w;
  return out;
}

size_t SegmentedSentence::char_count() const {
  size_t n = 0;
  for (const auto& w : words) n += w.size();
  return n;
}

bool SegmentedSentence::operator==(const SegmentedSentence& other) const {
  return words == other.words;
}

SegmentedSentence parse_segmented_line(std::string_view line, size_t line_no) {
  SegmentedSentence sentence;
  sentence.line_no = line_no;
  const std::u32string text = decode_utf8(line);
  std::u32string word;
  for (char32_t cp : text) {
    if (cp == U' ') {
      if (!word.empty()) {
        sentence.words.push_back(std::move(word));
        word.clear();
      }
    } else {
      word.push_back(cp);
    }
  }
  if (!word.empty()) sentence.words.push_back(std::move(word));
  return sentence;
}

std::vector<SegmentedSentence> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus: " + path.string());

  std::vector<SegmentedSentence> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(' ') == std::string::npos) continue;
    out.push_back(parse_segmented_line(line, line_no));
  }
  return out;
}

SegmentedSentence segment_greedy(std::u32string_view text,
                                 const std::vector<std::u32string>& dictionary) {
  size_t max_len = 1;
  std::set<std::u32string> dict(dictionary.begin(), dictionary.end());
  for (const auto& w : dict) max_len = std::max(max_len, w.size());

  SegmentedSentence sentence;
  size_t i = 0;
  while (i < text.size()) {
    size_t take = 1;
    for (size_t len = std::min(max_len, text.size() - i); len >= 2; --len) {
      if (dict.count(std::u32string(text.substr(i, len)))) {
        take = len;
        break;
      }
    }
    sentence.words.emplace_back(text.substr(i, take));
    i += take;
  }
  return sentence;
}

}  // namespace pyab
