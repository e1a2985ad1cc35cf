// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "pyabbrev/model.hpp"
#include "pyabbrev/pinyin.hpp"
#include "pyabbrev/tokenizer.hpp"
#include "pyabbrev/utf8.hpp"

namespace pyab {

struct Span {
  int start = 0;
  int length = 0;

  bool operator==(const Span&) const = default;
};

struct ConversionOptions {
  int beam_size = 16;
  int topk = 10;
  bool hard_filter = false;  // restrict candidates to matching pinyin initials
  bool one_shot = false;     // debug: score all positions from one forward pass
  bool allow_plain_mask = false;  // accept [MASK] at span positions (ablation)
};

/**
 * A conversion request: a character-level token sequence (unframed; the
 * decoder adds [CLS]/[SEP]) whose spans cover the mask positions to fill.
 */
struct ConversionQuery {
  TokenSequence tokens;
  std::vector<Span> spans;
  ConversionOptions options;
};

struct Candidate {
  std::string word;  // UTF-8
  double score = 0;  // normalized probability over surviving beams
};

struct SpanCandidates {
  std::vector<Candidate> entries;  // descending score, at most topk
};

struct RankedCandidates {
  std::vector<SpanCandidates> spans;  // one per query span, in span order
};

namespace detail {

struct Beam {
  std::vector<int> prefix;
  double score = 0;  // accumulated log-probability
};

inline bool beam_better(const Beam& a, const Beam& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.prefix < b.prefix;  // deterministic tie-break by token ids
}

template <class S>
Mat<S> framed_logprobs(const ModelParams<S>& params, std::vector<int> ids) {
  ids.insert(ids.begin(), Vocabulary::kCls);
  ids.push_back(Vocabulary::kSep);
  std::vector<int> attn(ids.size(), 1);
  SequenceCache<S> cache;
  forward_sequence(params, ids, attn, cache);
  return cache.logprobs;
}

}  // namespace detail

/**
 * Beam-search conversion of every span, left to right within a span, with
 * a fresh forward pass after each fixed position (conditional refinement).
 * Earlier spans are resolved first and their top-1 result substituted
 * before later spans. Final scores are the softmax of the surviving beams'
 * accumulated log-probabilities; ranking ties break by token id.
 */
template <class S>
RankedCandidates convert(const ModelParams<S>& params,
                         const ConversionQuery& query, const Vocabulary& vocab,
                         const PinyinTable& table) {
  const ConversionOptions& opt = query.options;
  if (opt.beam_size < 1 || opt.topk < 1)
    throw std::invalid_argument("beam_size and topk must be >= 1");
  if (query.spans.empty())
    throw std::invalid_argument("query has no spans");

  const int n = query.tokens.size();
  std::vector<Span> spans = query.spans;
  std::sort(spans.begin(), spans.end(),
            [](const Span& a, const Span& b) { return a.start < b.start; });
  int prev_end = -1;
  for (const Span& span : spans) {
    if (span.length < 1 || span.start < 0 || span.start + span.length > n)
      throw std::invalid_argument("span out of range");
    if (span.start < prev_end)
      throw std::invalid_argument("spans overlap");
    prev_end = span.start + span.length;
    for (int i = span.start; i < prev_end; ++i) {
      const int id = query.tokens.ids[static_cast<size_t>(i)];
      const bool ok = vocab.is_letter_mask(id) ||
                      (opt.allow_plain_mask && id == Vocabulary::kMask);
      if (!ok)
        throw std::invalid_argument(
            "span position " + std::to_string(i) +
            " does not hold a letter-mask token");
    }
  }

  // Base candidate pool: every real character token.
  std::vector<int> all_chars;
  for (int id = Vocabulary::kNumSpecials; id < vocab.size(); ++id)
    all_chars.push_back(id);

  std::vector<int> working = query.tokens.ids;
  RankedCandidates result;
  for (size_t s = 0; s < spans.size(); ++s) {
    const Span& span = spans[s];

    // Per-position feasible candidates.
    std::vector<std::vector<int>> feasible(static_cast<size_t>(span.length));
    for (int t = 0; t < span.length; ++t) {
      const int id = working[static_cast<size_t>(span.start + t)];
      if (opt.hard_filter) {
        if (!vocab.is_letter_mask(id))
          throw std::invalid_argument(
              "hard_filter requires letter-mask tokens in spans");
        const char letter = vocab.letter_of(id);
        for (int c : all_chars) {
          const char32_t ch = vocab.character_of(c);
          if (table.contains(ch) && initial_of(table, ch) == letter)
            feasible[static_cast<size_t>(t)].push_back(c);
        }
        if (feasible[static_cast<size_t>(t)].empty())
          throw NoCandidateError(static_cast<int>(s), span.start + t);
      } else {
        feasible[static_cast<size_t>(t)] = all_chars;
      }
    }

    Mat<S> one_shot_lp;
    if (opt.one_shot) one_shot_lp = detail::framed_logprobs<S>(params, working);

    std::vector<detail::Beam> beams{{{}, 0.0}};
    for (int t = 0; t < span.length; ++t) {
      std::vector<detail::Beam> extended;
      for (const auto& beam : beams) {
        Mat<S> lp;
        if (opt.one_shot) {
          lp = one_shot_lp;
        } else {
          std::vector<int> ids = working;
          for (size_t j = 0; j < beam.prefix.size(); ++j)
            ids[static_cast<size_t>(span.start) + j] = beam.prefix[j];
          lp = detail::framed_logprobs<S>(params, ids);
        }
        const int row = span.start + t + 1;  // +1 for [CLS]

        // Top beam_size extensions of this beam.
        const auto& cands = feasible[static_cast<size_t>(t)];
        std::vector<std::pair<double, int>> scored;
        scored.reserve(cands.size());
        for (int c : cands)
          scored.emplace_back(beam.score + static_cast<double>(lp(row, c)), c);
        const size_t keep = std::min<size_t>(scored.size(),
                                             static_cast<size_t>(opt.beam_size));
        std::partial_sort(scored.begin(), scored.begin() + keep, scored.end(),
                          [](const auto& a, const auto& b) {
                            if (a.first != b.first) return a.first > b.first;
                            return a.second < b.second;
                          });
        for (size_t j = 0; j < keep; ++j) {
          detail::Beam next = beam;
          next.prefix.push_back(scored[j].second);
          next.score = scored[j].first;
          extended.push_back(std::move(next));
        }
      }
      std::sort(extended.begin(), extended.end(), detail::beam_better);
      if (extended.size() > static_cast<size_t>(opt.beam_size))
        extended.resize(static_cast<size_t>(opt.beam_size));
      beams = std::move(extended);
    }

    // Normalized scores over the surviving beams (softmax of accumulated
    // log-probabilities); monotone in score, so ranking is unchanged.
    double max_score = beams.front().score;
    for (const auto& b : beams) max_score = std::max(max_score, b.score);
    double z = 0;
    for (const auto& b : beams) z += std::exp(b.score - max_score);

    SpanCandidates out;
    const size_t emit = std::min<size_t>(beams.size(),
                                         static_cast<size_t>(opt.topk));
    for (size_t j = 0; j < emit; ++j) {
      std::u32string word;
      for (int id : beams[j].prefix) word.push_back(vocab.character_of(id));
      out.entries.push_back(
          {encode_utf8(word), std::exp(beams[j].score - max_score) / z});
    }
    result.spans.push_back(std::move(out));

    // Substitute the top hypothesis so later spans condition on it.
    for (int t = 0; t < span.length; ++t)
      working[static_cast<size_t>(span.start + t)] = beams.front().prefix
          [static_cast<size_t>(t)];
  }
  return result;
}

/**
 * Parses the `{letters}` delimiter syntax (e.g. "我{fq}了音乐"): each brace
 * run becomes one span of letter-mask tokens. Throws DataError when no
 * span is present or a run contains anything but 'a'..'z'.
 */
ConversionQuery parse_query(const Vocabulary& vocab, std::string_view text,
                            const ConversionOptions& options = {});

template <class S>
RankedCandidates convert_text(const ModelParams<S>& params,
                              std::string_view text, const Vocabulary& vocab,
                              const PinyinTable& table,
                              const ConversionOptions& options = {}) {
  return convert(params, parse_query(vocab, text, options), vocab, table);
}

}  // namespace pyab
