// SPDX-License-Identifier: Apache-2.0
#include "pyabbrev/masking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pyabbrev/errors.hpp"
#include "pyabbrev/utf8.hpp"

namespace pyab {

void MaskingConfig::validate() const {
  if (mask_prob < 0.0 || mask_prob > 1.0)
    throw std::invalid_argument("mask_prob must be in [0, 1]");
  if (poly_boost < 1.0)
    throw std::invalid_argument("poly_boost must be >= 1");
}

int MaskedBatch::masked_count() const {
  return static_cast<int>((target_ids.array() != kIgnoreTarget).count());
}

bool MaskedBatch::operator==(const MaskedBatch& other) const {
  return input_ids == other.input_ids && target_ids == other.target_ids &&
         letter_labels == other.letter_labels &&
         attention_mask == other.attention_mask;
}

namespace {

bool word_maskable(const std::u32string& word, const PinyinTable& table,
                   const Vocabulary* vocab) {
  for (char32_t cp : word) {
    if (!table.contains(cp)) return false;
    if (vocab && vocab->char_id(cp) == Vocabulary::kUnk) return false;
  }
  return true;
}

}  // namespace

std::vector<int> select_words(const SegmentedSentence& sentence,
                              const MaskingConfig& config,
                              const PinyinTable& table, std::mt19937_64& rng,
                              const Vocabulary* vocab) {
  config.validate();
  if (sentence.words.empty())
    throw std::invalid_argument("select_words: empty sentence");

  const size_t total_chars = sentence.char_count();

  // Character budget: stochastic rounding keeps the expectation exactly
  // mask_prob x total_chars.
  const double exact = config.mask_prob * static_cast<double>(total_chars);
  size_t budget = static_cast<size_t>(std::floor(exact));
  const double frac = exact - std::floor(exact);
  if (frac > 0.0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng) < frac)
    ++budget;
  if (budget == 0) return {};

  struct Candidate {
    int index;
    size_t len;
    double weight;
  };
  std::vector<Candidate> candidates;
  for (int i = 0; i < static_cast<int>(sentence.words.size()); ++i) {
    const auto& word = sentence.words[i];
    if (!word_maskable(word, table, vocab)) continue;
    const double boost = word.size() > 1 ? config.poly_boost : 1.0;
    candidates.push_back({i, word.size(), static_cast<double>(word.size()) * boost});
  }

  std::vector<int> selected;
  size_t masked = 0;
  while (masked < budget && !candidates.empty()) {
    double total_weight = 0.0;
    for (const auto& c : candidates) total_weight += c.weight;
    double draw =
        std::uniform_real_distribution<double>(0.0, total_weight)(rng);
    size_t pick = candidates.size() - 1;
    for (size_t j = 0; j < candidates.size(); ++j) {
      draw -= candidates[j].weight;
      if (draw <= 0.0) {
        pick = j;
        break;
      }
    }
    const Candidate chosen = candidates[pick];
    candidates.erase(candidates.begin() + static_cast<ptrdiff_t>(pick));

    // A drawn word is taken only if it fits the remaining budget; words
    // that would overshoot are skipped and the fill continues.
    const size_t after = masked + chosen.len;
    if (after > budget) continue;
    selected.push_back(chosen.index);
    masked = after;
  }
  std::sort(selected.begin(), selected.end());
  return selected;
}

MaskedSentence apply_multi_mask(const SegmentedSentence& sentence,
                                const std::vector<int>& selected,
                                const PinyinTable& table,
                                const Vocabulary& vocab, MaskStyle style) {
  std::vector<bool> is_selected(sentence.words.size(), false);
  for (int idx : selected) {
    if (idx < 0 || idx >= static_cast<int>(sentence.words.size()))
      throw std::invalid_argument("apply_multi_mask: word index out of range");
    is_selected[idx] = true;
  }

  MaskedSentence out;
  for (size_t w = 0; w < sentence.words.size(); ++w) {
    for (char32_t cp : sentence.words[w]) {
      if (is_selected[w]) {
        const char letter = initial_of(table, cp);  // throws if unreadable
        out.input.ids.push_back(style == MaskStyle::kLetterMasks
                                    ? letter_mask_id(vocab, letter)
                                    : Vocabulary::kMask);
        out.targets.push_back(vocab.char_id(cp));
        out.letters.push_back(letter - 'a');
      } else {
        out.input.ids.push_back(vocab.char_id(cp));
        out.targets.push_back(kIgnoreTarget);
        out.letters.push_back(kIgnoreTarget);
      }
    }
  }
  return out;
}

namespace {

// Longest prefix of the sentence, in whole words, fitting `budget` chars.
SegmentedSentence truncate_to(const SegmentedSentence& sentence, size_t budget) {
  SegmentedSentence out;
  out.line_no = sentence.line_no;
  size_t used = 0;
  for (const auto& word : sentence.words) {
    if (used + word.size() > budget) break;
    out.words.push_back(word);
    used += word.size();
  }
  return out;
}

}  // namespace

MaskedBatch build_batch(const std::vector<SegmentedSentence>& sentences,
                        const MaskingConfig& config, const PinyinTable& table,
                        const Vocabulary& vocab, int max_len,
                        std::mt19937_64& rng) {
  if (sentences.empty())
    throw std::invalid_argument("build_batch: empty sentence list");
  if (max_len < 3)
    throw std::invalid_argument("build_batch: max_len must be at least 3");
  config.validate();

  const int batch = static_cast<int>(sentences.size());
  MaskedBatch out;
  out.input_ids = Eigen::MatrixXi::Constant(batch, max_len, Vocabulary::kPad);
  out.target_ids = Eigen::MatrixXi::Constant(batch, max_len, kIgnoreTarget);
  out.letter_labels = Eigen::MatrixXi::Constant(batch, max_len, kIgnoreTarget);
  out.attention_mask = Eigen::MatrixXi::Zero(batch, max_len);

  for (int b = 0; b < batch; ++b) {
    SegmentedSentence sentence = sentences[b];
    if (sentence.char_count() + 2 > static_cast<size_t>(max_len))
      sentence = truncate_to(sentence, static_cast<size_t>(max_len) - 2);
    if (sentence.words.empty())
      throw std::invalid_argument(
          "build_batch: sentence does not fit max_len even after word-boundary "
          "truncation (line " + std::to_string(sentences[b].line_no) + ")");

    const auto selected = select_words(sentence, config, table, rng, &vocab);
    const auto masked = apply_multi_mask(sentence, selected, table, vocab,
                                         config.style);

    out.input_ids(b, 0) = Vocabulary::kCls;
    out.attention_mask(b, 0) = 1;
    const int n = masked.input.size();
    for (int i = 0; i < n; ++i) {
      out.input_ids(b, i + 1) = masked.input.ids[i];
      out.target_ids(b, i + 1) = masked.targets[i];
      out.letter_labels(b, i + 1) = masked.letters[i];
      out.attention_mask(b, i + 1) = 1;
    }
    out.input_ids(b, n + 1) = Vocabulary::kSep;
    out.attention_mask(b, n + 1) = 1;
  }
  return out;
}

MaskedBatch build_batch(const std::vector<SegmentedSentence>& sentences,
                        const MaskingConfig& config, const PinyinTable& table,
                        const Vocabulary& vocab, int max_len) {
  std::mt19937_64 rng(config.seed);
  return build_batch(sentences, config, table, vocab, max_len, rng);
}

}  // namespace pyab
