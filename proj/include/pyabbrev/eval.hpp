// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <thread>

#include "pyabbrev/decode.hpp"
#include "pyabbrev/masking.hpp"
#include "pyabbrev/model.hpp"

namespace pyab {

/**
 * One abbreviation-conversion instance: a segmented sentence, the index of
 * the word replaced by its abbreviation, and the gold word.
 */
struct EvalRecord {
  SegmentedSentence text;
  int span_word_index = 0;
  std::u32string target;

  int target_length() const { return static_cast<int>(target.size()); }
};

// JSONL with fields text / span_word_index / target, one object per line.
std::vector<EvalRecord> load_testset(const std::filesystem::path& path);
void save_testset(const std::vector<EvalRecord>& records,
                  const std::filesystem::path& path);

// Ranks of K = 1, 5, 10 reported throughout.
inline constexpr std::array<int, 3> kMrrCutoffs = {1, 5, 10};

/**
 * Mean reciprocal rank at K: mean over records of 1/rank when rank <= K,
 * else 0. A miss is std::nullopt. Throws std::invalid_argument on an empty
 * list or K < 1.
 */
double mrr_at_k(const std::vector<std::optional<int>>& ranks, int k);

// 1-based rank of the exact target word among the candidates, or miss.
std::optional<int> rank_of_target(const SpanCandidates& candidates,
                                  std::u32string_view target);

// 1-based rank of the first candidate whose full pinyin (default readings)
// equals the target's. Candidates with unreadable characters never match.
std::optional<int> pinyin_rank_of_target(const SpanCandidates& candidates,
                                         std::u32string_view target,
                                         const PinyinTable& table);

struct SplitScores {
  long long count = 0;
  std::array<double, 3> word_mrr = {0, 0, 0};
  std::array<double, 3> pinyin_mrr = {0, 0, 0};
};

struct EvalReport {
  SplitScores overall;
  SplitScores monosyllabic;
  SplitScores polysyllabic;
  std::array<SplitScores, 4> by_length;  // words of length 1, 2, 3, 4+
  long long rejected = 0;

  std::string to_json() const;
  std::string to_table() const;
};

struct EvalOptions {
  int beam_size = 16;
  int topk = 10;
  bool hard_filter = false;
  MaskStyle mask_style = MaskStyle::kLetterMasks;
  int threads = 1;
};

/**
 * Builds the conversion query for a record: the sentence's characters with
 * the span word replaced by its letter-mask tokens (or plain [MASK] under
 * kSingleMask).
 */
ConversionQuery make_record_query(const EvalRecord& record,
                                  const Vocabulary& vocab,
                                  const PinyinTable& table,
                                  const ConversionOptions& options,
                                  MaskStyle style = MaskStyle::kLetterMasks);

// Per-record decode outcome, exposed for callers that need raw ranks.
struct RecordOutcome {
  int length = 0;
  bool rejected = false;
  std::optional<int> word_rank;
  std::optional<int> pinyin_rank;
};

EvalReport aggregate_outcomes(const std::vector<RecordOutcome>& outcomes);

template <class S>
RecordOutcome evaluate_record(const ModelParams<S>& params,
                              const EvalRecord& record, const Vocabulary& vocab,
                              const PinyinTable& table,
                              const EvalOptions& options) {
  RecordOutcome out;
  out.length = record.target_length();
  if (record.span_word_index < 0 ||
      record.span_word_index >= static_cast<int>(record.text.words.size())) {
    out.rejected = true;
    return out;
  }
  const auto& word =
      record.text.words[static_cast<size_t>(record.span_word_index)];
  try {
    if (abbreviation_of(table, word) != abbreviation_of(table, record.target)) {
      out.rejected = true;
      return out;
    }
  } catch (const DataError&) {
    out.rejected = true;
    return out;
  }

  ConversionOptions copt;
  copt.beam_size = options.beam_size;
  copt.topk = options.topk;
  copt.hard_filter = options.hard_filter;
  copt.allow_plain_mask = options.mask_style == MaskStyle::kSingleMask;
  ConversionQuery query =
      make_record_query(record, vocab, table, copt, options.mask_style);

  RankedCandidates ranked;
  try {
    ranked = convert(params, query, vocab, table);
  } catch (const NoCandidateError&) {
    out.word_rank = std::nullopt;
    out.pinyin_rank = std::nullopt;
    return out;
  }
  const SpanCandidates& cands = ranked.spans.front();
  out.word_rank = rank_of_target(cands, record.target);
  out.pinyin_rank = pinyin_rank_of_target(cands, record.target, table);
  return out;
}

/**
 * Full evaluation: decodes every record and reports word-level and
 * pinyin-level MRR@{1,5,10} overall, for monosyllabic and polysyllabic
 * words, and per word length. Records whose span letters mismatch their
 * target's abbreviation are rejected (counted, run continues). Fixed-order
 * aggregation keeps results deterministic for any thread count.
 */
template <class S>
EvalReport evaluate(const ModelParams<S>& params,
                    const std::vector<EvalRecord>& records,
                    const Vocabulary& vocab, const PinyinTable& table,
                    const EvalOptions& options = {}) {
  if (records.empty())
    throw std::invalid_argument("evaluate: no records");
  std::vector<RecordOutcome> outcomes(records.size());

  const int threads = std::max(1, options.threads);
  if (threads == 1) {
    for (size_t i = 0; i < records.size(); ++i)
      outcomes[i] = evaluate_record(params, records[i], vocab, table, options);
  } else {
    std::vector<std::thread> pool;
    std::atomic<size_t> next{0};
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < records.size();
             i = next.fetch_add(1))
          outcomes[i] =
              evaluate_record(params, records[i], vocab, table, options);
      });
    for (auto& th : pool) th.join();
  }
  return aggregate_outcomes(outcomes);
}

struct BenchResult {
  double qps = 0;
  long long completed = 0;
  double elapsed_seconds = 0;
  long long parameter_count = 0;
  long long parameter_bytes = 0;
  long long peak_rss_bytes = 0;  // allocator-level estimate

  std::string to_json() const;
};

long long current_peak_rss_bytes();

/**
 * Decodes records cyclically for `duration_seconds` of wall-clock time
 * after `warmup` untimed queries. Single client by default; `concurrency`
 * clients otherwise.
 */
template <class S>
BenchResult bench_qps(const ModelParams<S>& params,
                      const std::vector<EvalRecord>& records,
                      const Vocabulary& vocab, const PinyinTable& table,
                      int warmup, double duration_seconds,
                      const EvalOptions& options = {}, int concurrency = 1) {
  if (duration_seconds <= 0)
    throw std::invalid_argument("bench_qps: duration must be > 0");
  if (records.empty())
    throw std::invalid_argument("bench_qps: no records");
  if (concurrency < 1)
    throw std::invalid_argument("bench_qps: concurrency must be >= 1");

  EvalOptions opt = options;
  opt.threads = 1;
  for (int i = 0; i < warmup; ++i)
    evaluate_record(params, records[static_cast<size_t>(i) % records.size()],
                    vocab, table, opt);

  using clock = std::chrono::steady_clock;
  std::atomic<long long> completed{0};
  const auto start = clock::now();
  const auto deadline =
      start + std::chrono::duration_cast<clock::duration>(
                  std::chrono::duration<double>(duration_seconds));

  auto worker = [&](size_t offset) {
    size_t i = offset;
    while (clock::now() < deadline) {
      evaluate_record(params, records[i % records.size()], vocab, table, opt);
      completed.fetch_add(1);
      ++i;
    }
  };
  if (concurrency == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < concurrency; ++t)
      pool.emplace_back(worker, static_cast<size_t>(t) * 17);
    for (auto& th : pool) th.join();
  }
  const double elapsed =
      std::chrono::duration<double>(clock::now() - start).count();

  BenchResult result;
  result.completed = completed.load();
  result.elapsed_seconds = elapsed;
  result.qps = result.completed / elapsed;
  result.parameter_count = parameter_count(params);
  result.parameter_bytes = result.parameter_count * sizeof(S);
  result.peak_rss_bytes = current_peak_rss_bytes();
  return result;
}

/**
 * Runs the batch through the model and writes, for each requested MoE
 * layer, one CSV of per-token routing features: token id, letter-mask
 * flag, the selected expert indices, the full router weight vector, and
 * the layer's input and output feature vectors. Files are written as
 * `<stem>.layer<k>.csv` next to `path`.
 */
template <class S>
std::vector<std::filesystem::path> export_routing_stats(
    const ModelParams<S>& params, const MaskedBatch& batch,
    const std::vector<int>& layer_indices, const std::filesystem::path& path,
    const Vocabulary& vocab) {
  for (int layer : layer_indices) {
    if (layer < 0 || layer >= params.config.num_layers ||
        !params.config.moe_plan.count(layer))
      throw std::invalid_argument("layer " + std::to_string(layer) +
                                  " is not an MoE layer");
  }

  std::vector<SequenceCache<S>> caches(static_cast<size_t>(batch.batch_size()));
  for (int b = 0; b < batch.batch_size(); ++b) {
    std::vector<int> ids(static_cast<size_t>(batch.width()));
    std::vector<int> attn(static_cast<size_t>(batch.width()));
    for (int i = 0; i < batch.width(); ++i) {
      ids[static_cast<size_t>(i)] = batch.input_ids(b, i);
      attn[static_cast<size_t>(i)] = batch.attention_mask(b, i);
    }
    forward_sequence(params, ids, attn, caches[static_cast<size_t>(b)]);
  }

  std::vector<std::filesystem::path> written;
  for (int layer : layer_indices) {
    std::filesystem::path out_path = path;
    std::string stem = out_path.stem().string();
    out_path.replace_filename(stem + ".layer" + std::to_string(layer) +
                              ".csv");
    std::ofstream out(out_path);
    if (!out)
      throw DataError("cannot write routing stats: " + out_path.string());

    const int num_experts = params.config.moe_plan.at(layer).num_experts;
    const int hidden = params.config.hidden_dim;
    out << "token_id,is_letter_mask,experts";
    for (int e = 0; e < num_experts; ++e) out << ",w" << e;
    for (int d = 0; d < hidden; ++d) out << ",in" << d;
    for (int d = 0; d < hidden; ++d) out << ",out" << d;
    out << '\n';
    out << std::setprecision(9);

    for (int b = 0; b < batch.batch_size(); ++b) {
      const auto& lc = caches[static_cast<size_t>(b)].layers[static_cast<size_t>(layer)];
      for (int i = 0; i < batch.width(); ++i) {
        if (!batch.attention_mask(b, i)) continue;
        const int token = batch.input_ids(b, i);
        const auto& tc = lc.moe[static_cast<size_t>(i)];
        out << token << ',' << (vocab.is_letter_mask(token) ? 1 : 0) << ',';
        for (size_t j = 0; j < tc.top.size(); ++j)
          out << (j ? "|" : "") << tc.top[j];
        for (int e = 0; e < num_experts; ++e) out << ',' << tc.weights[e];
        for (int d = 0; d < hidden; ++d) out << ',' << tc.input[d];
        const Vec<S> y = tc.alpha * tc.shared_out + tc.beta * tc.routed;
        for (int d = 0; d < hidden; ++d) out << ',' << y[d];
        out << '\n';
      }
    }
    written.push_back(out_path);
  }
  return written;
}

}  // namespace pyab
