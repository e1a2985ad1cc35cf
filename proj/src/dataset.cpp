// SPDX-License-Identifier: Apache-2.0
#include "pyabbrev/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <json.hpp>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "pyabbrev/errors.hpp"
#include "pyabbrev/utf8.hpp"

namespace pyab {

namespace {

// Pure function words never used as replacement targets; they carry no
// recoverable content and would dominate the samples otherwise.
const std::set<std::u32string>& stopwords() {
  static const std::set<std::u32string> words = {
      U"的", U"了", U"着", U"吗", U"呢", U"吧", U"啊", U"呀", U"嘛", U"哦",
  };
  return words;
}

bool word_eligible(const std::u32string& word, const PinyinTable& table) {
  if (stopwords().count(word)) return false;
  for (char32_t cp : word)
    if (!table.contains(cp)) return false;
  return true;
}

int length_bucket(size_t len) { return static_cast<int>(std::min<size_t>(len, 4)) - 1; }

}  // namespace

void TestsetConfig::validate() const {
  if (target_size < 1)
    throw std::invalid_argument("target_size must be >= 1");
  if (max_word_share <= 0.0 || max_word_share > 1.0)
    throw std::invalid_argument("max_word_share must be in (0, 1]");
  if (length_weights) {
    double sum = 0;
    for (double w : *length_weights) {
      if (w < 0) throw std::invalid_argument("length_weights must be >= 0");
      sum += w;
    }
    if (sum <= 0) throw std::invalid_argument("length_weights sum to zero");
  }
}

std::vector<EvalRecord> build_testset(
    const std::vector<SegmentedSentence>& corpus, const PinyinTable& table,
    const TestsetConfig& config) {
  config.validate();

  // Occurrence cap per replaced word: share x size, integer occurrences.
  const long long cap = static_cast<long long>(
      std::floor(config.max_word_share * config.target_size + 1e-9));

  std::mt19937_64 rng(config.seed);
  std::vector<size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  std::array<long long, 4> quota = {0, 0, 0, 0};
  const bool weighted = config.length_weights.has_value();
  if (weighted) {
    double sum = 0;
    for (double w : *config.length_weights) sum += w;
    for (size_t b = 0; b < 4; ++b)
      quota[b] = std::llround(config.target_size *
                              (*config.length_weights)[b] / sum);
  }

  std::map<std::u32string, long long> used;
  std::array<long long, 4> bucket_counts = {0, 0, 0, 0};
  std::vector<EvalRecord> records;

  for (size_t idx : order) {
    if (static_cast<int>(records.size()) >= config.target_size) break;
    const SegmentedSentence& sentence = corpus[idx];

    std::vector<int> eligible;
    for (size_t w = 0; w < sentence.words.size(); ++w)
      if (word_eligible(sentence.words[w], table))
        eligible.push_back(static_cast<int>(w));
    if (eligible.empty()) continue;
    std::shuffle(eligible.begin(), eligible.end(), rng);

    // Under a target length mix, prefer words from under-filled buckets.
    if (weighted)
      std::stable_sort(eligible.begin(), eligible.end(), [&](int a, int b) {
        const int ba = length_bucket(sentence.words[static_cast<size_t>(a)].size());
        const int bb = length_bucket(sentence.words[static_cast<size_t>(b)].size());
        const bool a_open = bucket_counts[static_cast<size_t>(ba)] < quota[static_cast<size_t>(ba)];
        const bool b_open = bucket_counts[static_cast<size_t>(bb)] < quota[static_cast<size_t>(bb)];
        return a_open > b_open;
      });

    for (int w : eligible) {
      const std::u32string& word = sentence.words[static_cast<size_t>(w)];
      if (used[word] >= cap) continue;
      ++used[word];
      ++bucket_counts[static_cast<size_t>(length_bucket(word.size()))];
      EvalRecord rec;
      rec.text = sentence;
      rec.span_word_index = w;
      rec.target = word;
      records.push_back(std::move(rec));
      break;
    }
  }

  if (static_cast<int>(records.size()) < config.target_size)
    throw ShortfallError(config.target_size,
                         static_cast<int>(records.size()));
  return records;
}

TestsetStats testset_stats(const std::vector<EvalRecord>& records) {
  if (records.empty())
    throw std::invalid_argument("testset_stats: no records");
  TestsetStats stats;
  std::array<std::set<std::u32string>, 4> distinct;
  std::set<std::u32string> distinct_all;
  for (const auto& rec : records) {
    ++stats.total;
    const int bucket = length_bucket(rec.target.size());
    ++stats.count_by_length[static_cast<size_t>(bucket)];
    distinct[static_cast<size_t>(bucket)].insert(rec.target);
    distinct_all.insert(rec.target);
  }
  for (size_t b = 0; b < 4; ++b)
    stats.distinct_by_length[b] = static_cast<long long>(distinct[b].size());
  stats.distinct_total = static_cast<long long>(distinct_all.size());
  return stats;
}

std::array<double, 4> TestsetStats::share_by_length() const {
  std::array<double, 4> shares{};
  for (size_t b = 0; b < 4; ++b)
    shares[b] = total ? static_cast<double>(count_by_length[b]) / double(total) : 0.0;
  return shares;
}

std::string TestsetStats::to_table() const {
  const auto shares = share_by_length();
  std::ostringstream out;
  out << std::left << std::setw(26) << "word length" << std::right
      << std::setw(10) << "total" << std::setw(10) << "1" << std::setw(10)
      << "2" << std::setw(10) << "3" << std::setw(10) << "4+" << '\n';
  out << std::fixed << std::setprecision(2);
  out << std::left << std::setw(26) << "rate" << std::right << std::setw(9)
      << 100.0 << "%";
  for (double s : shares) out << std::setw(9) << s * 100.0 << "%";
  out << '\n';
  out << std::left << std::setw(26) << "count" << std::right << std::setw(10)
      << total;
  for (long long c : count_by_length) out << std::setw(10) << c;
  out << '\n';
  out << std::left << std::setw(26) << "different replaced words" << std::right
      << std::setw(10) << distinct_total;
  for (long long c : distinct_by_length) out << std::setw(10) << c;
  out << '\n';
  return out.str();
}

std::string TestsetStats::to_json() const {
  nlohmann::json out;
  const auto shares = share_by_length();
  out["total"] = total;
  const char* keys[4] = {"1", "2", "3", "4+"};
  for (size_t b = 0; b < 4; ++b) {
    out["count"][keys[b]] = count_by_length[b];
    out["rate"][keys[b]] = shares[b];
    out["distinct"][keys[b]] = distinct_by_length[b];
  }
  out["distinct_total"] = distinct_total;
  return out.dump(2);
}

}  // namespace pyab
