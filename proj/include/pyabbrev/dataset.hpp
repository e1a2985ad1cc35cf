// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pyabbrev/eval.hpp"
#include "pyabbrev/pinyin.hpp"

namespace pyab {

struct TestsetConfig {
  int target_size = 0;
  double max_word_share = 0.004;  // cap on one replaced word's share of records
  // Optional target mix over word-length buckets 1, 2, 3, 4+; defaults to
  // the corpus's natural distribution.
  std::optional<std::array<double, 4>> length_weights;
  std::uint64_t seed = 0;

  void validate() const;
};

/**
 * Builds abbreviation test records from a segmented corpus: each sentence
 * contributes at most one record replacing one randomly chosen eligible
 * word (all characters readable, not a pure function word). No replaced
 * word may exceed max_word_share x target_size occurrences. Deterministic
 * under the seed. Throws ShortfallError when the corpus cannot reach
 * target_size under the constraints.
 */
std::vector<EvalRecord> build_testset(
    const std::vector<SegmentedSentence>& corpus, const PinyinTable& table,
    const TestsetConfig& config);

struct TestsetStats {
  long long total = 0;
  std::array<long long, 4> count_by_length = {0, 0, 0, 0};    // 1, 2, 3, 4+
  std::array<long long, 4> distinct_by_length = {0, 0, 0, 0};
  long long distinct_total = 0;

  std::array<double, 4> share_by_length() const;
  std::string to_table() const;
  std::string to_json() const;
};

// Distribution of replaced words per length bucket, Table-style.
TestsetStats testset_stats(const std::vector<EvalRecord>& records);

}  // namespace pyab
