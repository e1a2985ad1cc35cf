// SPDX-License-Identifier: Apache-2.0
#include "pyabbrev/eval.hpp"

#include <sys/resource.h>

#include <iostream>
#include <json.hpp>

#include "pyabbrev/errors.hpp"
#include "pyabbrev/utf8.hpp"

namespace pyab {

using nlohmann::json;

std::vector<EvalRecord> load_testset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open test set: " + path.string());
  std::vector<EvalRecord> records;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " +
                      e.what());
    }
    if (!obj.contains("text") || !obj.contains("span_word_index") ||
        !obj.contains("target"))
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": record needs text, span_word_index and target");
    EvalRecord rec;
    rec.text = parse_segmented_line(obj["text"].get<std::string>(), line_no);
    rec.span_word_index = obj["span_word_index"].get<int>();
    rec.target = decode_utf8(obj["target"].get<std::string>());
    records.push_back(std::move(rec));
  }
  return records;
}

void save_testset(const std::vector<EvalRecord>& records,
                  const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write test set: " + path.string());
  for (const auto& rec : records) {
    std::string text;
    for (size_t w = 0; w < rec.text.words.size(); ++w) {
      if (w) text += ' ';
      text += encode_utf8(rec.text.words[w]);
    }
    json obj;
    obj["text"] = text;
    obj["span_word_index"] = rec.span_word_index;
    obj["target"] = encode_utf8(rec.target);
    out << obj.dump() << '\n';
  }
}

double mrr_at_k(const std::vector<std::optional<int>>& ranks, int k) {
  if (ranks.empty()) throw std::invalid_argument("mrr_at_k: empty rank list");
  if (k < 1) throw std::invalid_argument("mrr_at_k: K must be >= 1");
  double sum = 0;
  for (const auto& rank : ranks) {
    if (!rank) continue;
    if (*rank < 1) throw std::invalid_argument("mrr_at_k: ranks must be >= 1");
    if (*rank <= k) sum += 1.0 / static_cast<double>(*rank);
  }
  return sum / static_cast<double>(ranks.size());
}

std::optional<int> rank_of_target(const SpanCandidates& candidates,
                                  std::u32string_view target) {
  const std::string target_utf8 = encode_utf8(target);
  for (size_t i = 0; i < candidates.entries.size(); ++i)
    if (candidates.entries[i].word == target_utf8)
      return static_cast<int>(i) + 1;
  return std::nullopt;
}

std::optional<int> pinyin_rank_of_target(const SpanCandidates& candidates,
                                         std::u32string_view target,
                                         const PinyinTable& table) {
  const auto target_pinyin = full_pinyin_of(table, target);
  for (size_t i = 0; i < candidates.entries.size(); ++i) {
    const std::u32string word = decode_utf8(candidates.entries[i].word);
    try {
      if (full_pinyin_of(table, word) == target_pinyin)
        return static_cast<int>(i) + 1;
    } catch (const MissingReadingError& e) {
      std::cerr << "pinyin_rank_of_target: skipping candidate '"
                << candidates.entries[i].word << "': " << e.what() << '\n';
    }
  }
  return std::nullopt;
}

ConversionQuery make_record_query(const EvalRecord& record,
                                  const Vocabulary& vocab,
                                  const PinyinTable& table,
                                  const ConversionOptions& options,
                                  MaskStyle style) {
  if (record.span_word_index < 0 ||
      record.span_word_index >= static_cast<int>(record.text.words.size()))
    throw std::invalid_argument("record span_word_index out of range");

  ConversionQuery query;
  query.options = options;
  if (style == MaskStyle::kSingleMask) query.options.allow_plain_mask = true;

  Span span;
  for (size_t w = 0; w < record.text.words.size(); ++w) {
    const auto& word = record.text.words[w];
    if (static_cast<int>(w) == record.span_word_index) {
      span.start = query.tokens.size();
      span.length = static_cast<int>(word.size());
      for (char32_t cp : word) {
        query.tokens.ids.push_back(style == MaskStyle::kLetterMasks
                                       ? letter_mask_id(vocab, initial_of(table, cp))
                                       : Vocabulary::kMask);
      }
    } else {
      for (char32_t cp : word) query.tokens.ids.push_back(vocab.char_id(cp));
    }
  }
  query.spans.push_back(span);
  return query;
}

namespace {

struct SplitAccumulator {
  std::vector<std::optional<int>> word_ranks;
  std::vector<std::optional<int>> pinyin_ranks;

  void add(const RecordOutcome& outcome) {
    word_ranks.push_back(outcome.word_rank);
    pinyin_ranks.push_back(outcome.pinyin_rank);
  }

  SplitScores finalize() const {
    SplitScores scores;
    scores.count = static_cast<long long>(word_ranks.size());
    if (word_ranks.empty()) return scores;
    for (size_t j = 0; j < kMrrCutoffs.size(); ++j) {
      scores.word_mrr[j] = mrr_at_k(word_ranks, kMrrCutoffs[j]);
      scores.pinyin_mrr[j] = mrr_at_k(pinyin_ranks, kMrrCutoffs[j]);
    }
    return scores;
  }
};

json split_to_json(const SplitScores& s) {
  json out;
  out["count"] = s.count;
  for (size_t j = 0; j < kMrrCutoffs.size(); ++j) {
    out["mrr@" + std::to_string(kMrrCutoffs[j])] = s.word_mrr[j];
    out["pinyin_mrr@" + std::to_string(kMrrCutoffs[j])] = s.pinyin_mrr[j];
  }
  return out;
}

}  // namespace

EvalReport aggregate_outcomes(const std::vector<RecordOutcome>& outcomes) {
  SplitAccumulator overall, mono, poly;
  std::array<SplitAccumulator, 4> by_length;
  EvalReport report;
  for (const auto& outcome : outcomes) {
    if (outcome.rejected) {
      ++report.rejected;
      continue;
    }
    overall.add(outcome);
    (outcome.length == 1 ? mono : poly).add(outcome);
    const int bucket = std::min(outcome.length, 4) - 1;
    by_length[static_cast<size_t>(bucket)].add(outcome);
  }
  report.overall = overall.finalize();
  report.monosyllabic = mono.finalize();
  report.polysyllabic = poly.finalize();
  for (size_t i = 0; i < by_length.size(); ++i)
    report.by_length[i] = by_length[i].finalize();
  return report;
}

std::string EvalReport::to_json() const {
  json out;
  out["overall"] = split_to_json(overall);
  out["monosyllabic"] = split_to_json(monosyllabic);
  out["polysyllabic"] = split_to_json(polysyllabic);
  out["by_length"]["1"] = split_to_json(by_length[0]);
  out["by_length"]["2"] = split_to_json(by_length[1]);
  out["by_length"]["3"] = split_to_json(by_length[2]);
  out["by_length"]["4+"] = split_to_json(by_length[3]);
  out["rejected"] = rejected;
  return out.dump(2);
}

std::string EvalReport::to_table() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  const auto row = [&](const std::string& name, const SplitScores& s) {
    out << std::left << std::setw(14) << name << std::right;
    out << std::setw(8) << s.count;
    for (double v : s.word_mrr) out << std::setw(10) << v;
    for (double v : s.pinyin_mrr) out << std::setw(10) << v;
    out << '\n';
  };
  out << std::left << std::setw(14) << "split" << std::right << std::setw(8)
      << "count" << std::setw(10) << "mrr@1" << std::setw(10) << "mrr@5"
      << std::setw(10) << "mrr@10" << std::setw(10) << "py@1" << std::setw(10)
      << "py@5" << std::setw(10) << "py@10" << '\n';
  row("overall", overall);
  row("monosyllabic", monosyllabic);
  row("polysyllabic", polysyllabic);
  row("length-1", by_length[0]);
  row("length-2", by_length[1]);
  row("length-3", by_length[2]);
  row("length-4+", by_length[3]);
  if (rejected > 0) out << "rejected records: " << rejected << '\n';
  return out.str();
}

long long current_peak_rss_bytes() {
  struct rusage usage {};
  getrusage(RUSAGE_SELF, &usage);
  return static_cast<long long>(usage.ru_maxrss) * 1024;  // Linux: KiB
}

std::string BenchResult::to_json() const {
  json out;
  out["qps"] = qps;
  out["completed"] = completed;
  out["elapsed_seconds"] = elapsed_seconds;
  out["parameter_count"] = parameter_count;
  out["parameter_bytes"] = parameter_bytes;
  out["peak_rss_bytes"] = peak_rss_bytes;
  return out.dump(2);
}

}  // namespace pyab
