// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <vector>

#include "pyabbrev/corpus.hpp"
#include "pyabbrev/pinyin.hpp"
#include "pyabbrev/tokenizer.hpp"

namespace pyab {

// Target value at positions that contribute nothing to the loss.
constexpr int kIgnoreTarget = -1;

enum class MaskStyle {
  kLetterMasks,  // each masked character becomes its pinyin-initial mask token
  kSingleMask,   // every masked character becomes plain [MASK] (ablation)
};

struct MaskingConfig {
  double mask_prob = 0.15;  // fraction of characters targeted for masking
  double poly_boost = 2.0;  // selection weight multiplier for multi-char words
  std::uint64_t seed = 0;
  MaskStyle style = MaskStyle::kLetterMasks;

  void validate() const;
};

/**
 * A padded training batch. All matrices are batch x width. At masked
 * positions input_ids holds a letter-mask id, target_ids the gold character
 * id and letter_labels the mask letter as 0..25; everywhere else target_ids
 * and letter_labels hold kIgnoreTarget. attention_mask is 1 on real tokens
 * ([CLS], characters, [SEP]) and 0 on [PAD].
 */
struct MaskedBatch {
  Eigen::MatrixXi input_ids;
  Eigen::MatrixXi target_ids;
  Eigen::MatrixXi letter_labels;
  Eigen::MatrixXi attention_mask;

  int batch_size() const { return static_cast<int>(input_ids.rows()); }
  int width() const { return static_cast<int>(input_ids.cols()); }
  int masked_count() const;

  bool operator==(const MaskedBatch& other) const;
};

/**
 * Samples the whole-word mask selection for one sentence. Words are drawn
 * without replacement with probability proportional to
 * char_count x (poly_boost for multi-character words) until the character
 * budget (mask_prob x sentence characters, stochastically rounded) is met.
 * Words containing characters without pinyin readings are never selected;
 * when `vocab` is given, words with out-of-vocabulary characters are also
 * excluded so gold targets stay real character ids.
 *
 * Returns sorted word indices; may be empty.
 */
std::vector<int> select_words(const SegmentedSentence& sentence,
                              const MaskingConfig& config,
                              const PinyinTable& table, std::mt19937_64& rng,
                              const Vocabulary* vocab = nullptr);

struct MaskedSentence {
  TokenSequence input;      // character-level ids, no [CLS]/[SEP] framing
  std::vector<int> targets;  // gold char id at masked positions, else ignore
  std::vector<int> letters;  // pinyin-initial index 0..25, else ignore
};

/**
 * Replaces every character of the selected words by the mask token of its
 * pinyin initial (or plain [MASK] under MaskStyle::kSingleMask). Selected
 * words are always fully replaced; no random-token or keep-original
 * substitution ever occurs.
 */
MaskedSentence apply_multi_mask(const SegmentedSentence& sentence,
                                const std::vector<int>& selected,
                                const PinyinTable& table,
                                const Vocabulary& vocab,
                                MaskStyle style = MaskStyle::kLetterMasks);

/**
 * Masks, frames with [CLS]/[SEP], and pads a batch to exactly `max_len`
 * columns. Sentences longer than max_len - 2 are truncated at a word
 * boundary. Throws std::invalid_argument on an empty sentence list.
 */
MaskedBatch build_batch(const std::vector<SegmentedSentence>& sentences,
                        const MaskingConfig& config, const PinyinTable& table,
                        const Vocabulary& vocab, int max_len);

// As above but with the caller owning the RNG stream (used by the trainer
// so epochs consume one deterministic stream).
MaskedBatch build_batch(const std::vector<SegmentedSentence>& sentences,
                        const MaskingConfig& config, const PinyinTable& table,
                        const Vocabulary& vocab, int max_len,
                        std::mt19937_64& rng);

}  // namespace pyab
