// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace pyab {

/**
 * One pre-segmented sentence: a list of words, each a sequence of
 * codepoints. Words are never empty; joining the words reproduces the
 * original sentence text.
 */
struct SegmentedSentence {
  std::vector<std::u32string> words;
  size_t line_no = 0;

  std::u32string text() const;
  size_t char_count() const;

  bool operator==(const SegmentedSentence&) const;
};

/**
 * Loads a corpus file: UTF-8, one sentence per line, words separated by
 * single ASCII spaces, blank lines skipped.
 */
std::vector<SegmentedSentence> load_corpus(const std::filesystem::path& path);

SegmentedSentence parse_segmented_line(std::string_view line, size_t line_no);

/**
 * Greedy longest-match segmentation of raw (unsegmented) text against a
 * user-supplied word list. Characters not starting any dictionary word
 * become single-character words. Convenience only; corpora normally
 * arrive pre-segmented.
 */
SegmentedSentence segment_greedy(std::u32string_view text,
                                 const std::vector<std::u32string>& dictionary);

}  // namespace pyab
