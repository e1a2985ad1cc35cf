// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>

#include "pyabbrev/eval.hpp"
#include "test_util.hpp"

using namespace pyab;

namespace {

struct Fixture {
  PinyinTable table;
  std::vector<SegmentedSentence> corpus;
  Vocabulary vocab;

  Fixture() {
    table = load_pinyin_table(testutil::data_dir() / "pinyin_base.tsv");
    corpus = load_corpus(testutil::data_dir() / "toy_corpus_200.txt");
    vocab = build_vocabulary(corpus, 1);
  }

  ModelParams<float> model(std::uint64_t seed = 3) const {
    ModelConfig c;
    c.num_layers = 1;
    c.hidden_dim = 16;
    c.num_heads = 2;
    c.ffn_dim = 32;
    c.vocab_size = vocab.size();
    c.max_position = 32;
    c.moe_plan = {{0, {2, 1}}};
    return init_model<float>(c, seed);
  }
};

SpanCandidates candidates_of(const std::vector<std::string>& words) {
  SpanCandidates out;
  double score = 0.5;
  for (const auto& w : words) {
    out.entries.push_back({w, score});
    score /= 2;
  }
  return out;
}

// Brute-force re-implementation of the MRR@K definition, kept deliberately
// separate from the library code path.
double mrr_oracle(const std::vector<std::optional<int>>& ranks, int k) {
  double total = 0;
  int n = 0;
  for (const auto& r : ranks) {
    ++n;
    if (r.has_value() && *r <= k) total += 1.0 / *r;
  }
  return total / n;
}

}  // namespace

TEST_CASE("mrr_at_k hand cases") {
  CHECK(mrr_at_k({1, 1, 1}, 1) == 1.0);
  CHECK(mrr_at_k({1, 1, 1}, 10) == 1.0);
  CHECK(mrr_at_k({3}, 5) == doctest::Approx(1.0 / 3));
  CHECK(mrr_at_k({std::optional<int>(1), std::nullopt, std::optional<int>(2)},
                 10) == doctest::Approx(0.5));
  CHECK(mrr_at_k({std::optional<int>(3)}, 2) == 0.0);  // beyond the cutoff
  CHECK_THROWS_AS(mrr_at_k({}, 5), std::invalid_argument);
  CHECK_THROWS_AS(mrr_at_k({1}, 0), std::invalid_argument);
  CHECK_THROWS_AS(mrr_at_k({std::optional<int>(0)}, 5), std::invalid_argument);
}

TEST_CASE("mrr_at_k agrees with a brute-force oracle on random rank lists") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 20);
    std::vector<std::optional<int>> ranks;
    for (int i = 0; i < n; ++i) {
      if (rng() % 4 == 0)
        ranks.push_back(std::nullopt);
      else
        ranks.push_back(1 + static_cast<int>(rng() % 15));
    }
    const int k = 1 + static_cast<int>(rng() % 12);
    CHECK(mrr_at_k(ranks, k) == mrr_oracle(ranks, k));
  }
}

TEST_CASE("K-monotonicity of MRR") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::optional<int>> ranks;
    for (int i = 0; i < 10; ++i)
      ranks.push_back(rng() % 3 ? std::optional<int>(1 + int(rng() % 12))
                                : std::nullopt);
    double prev = 0;
    for (int k : {1, 2, 5, 10, 20}) {
      const double v = mrr_at_k(ranks, k);
      CHECK(v >= prev);
      prev = v;
    }
  }
}

TEST_CASE("rank_of_target basics") {
  const auto cands = candidates_of({"媒体", "模特", "木头", "模特"});
  CHECK(rank_of_target(cands, U"媒体") == 1);
  CHECK(rank_of_target(cands, U"模特") == 2);  // first occurrence
  CHECK(rank_of_target(cands, U"煤炭") == std::nullopt);
}

TEST_CASE("pinyin_rank_of_target uses full-syllable matches") {
  Fixture f;
  // 模特 (mo te) does not match 媒体 (mei ti); the word itself at rank 2 does.
  const auto cands = candidates_of({"模特", "媒体"});
  CHECK(pinyin_rank_of_target(cands, U"媒体", f.table) == 2);
  CHECK(rank_of_target(cands, U"媒体") == 2);

  // 煤炭 (mei tan) shares an initial but not the syllables.
  const auto tan = candidates_of({"煤炭"});
  CHECK(pinyin_rank_of_target(tan, U"媒体", f.table) == std::nullopt);

  // A homophone ranks before the exact match.
  const auto homophone = candidates_of({"煤体", "媒体"});
  CHECK(pinyin_rank_of_target(homophone, U"媒体", f.table) == 1);

  // Exact match at rank 1 implies pinyin rank 1.
  const auto exact = candidates_of({"媒体", "模特"});
  CHECK(pinyin_rank_of_target(exact, U"媒体", f.table) == 1);

  // Unreadable candidates are skipped, not fatal.
  const auto unreadable = candidates_of({"xx", "媒体"});
  CHECK(pinyin_rank_of_target(unreadable, U"媒体", f.table) == 2);
}

TEST_CASE("test set JSONL round-trips") {
  Fixture f;
  std::vector<EvalRecord> records;
  EvalRecord rec;
  rec.text = parse_segmented_line("我们 喜欢 音乐", 1);
  rec.span_word_index = 2;
  rec.target = U"音乐";
  records.push_back(rec);
  rec.text = parse_segmented_line("你 喝 茶", 2);
  rec.span_word_index = 2;
  rec.target = U"茶";
  records.push_back(rec);

  const auto path = testutil::write_temp("", ".jsonl");
  save_testset(records, path);
  const auto loaded = load_testset(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].text.words == records[0].text.words);
  CHECK(loaded[0].span_word_index == 2);
  CHECK(loaded[0].target == U"音乐");
  CHECK(loaded[1].target == U"茶");

  CHECK_THROWS_AS(load_testset(testutil::write_temp("{\"text\": 1}\n", ".jsonl")),
                  DataError);
  CHECK_THROWS_AS(load_testset(testutil::write_temp("not json\n", ".jsonl")),
                  DataError);
}

TEST_CASE("evaluate produces a structurally sound report") {
  Fixture f;
  const auto params = f.model();

  std::vector<EvalRecord> records;
  for (int i = 0; i < 6; ++i) {
    const auto& sentence = f.corpus[static_cast<size_t>(i)];
    EvalRecord rec;
    rec.text = sentence;
    rec.span_word_index = static_cast<int>(sentence.words.size()) - 1;
    rec.target = sentence.words.back();
    records.push_back(rec);
  }
  // One record whose target mismatches the span letters: rejected.
  EvalRecord bad;
  bad.text = parse_segmented_line("我们 喜欢 音乐", 1);
  bad.span_word_index = 2;
  bad.target = U"习题";  // "xt" vs the span's "yl"
  records.push_back(bad);

  EvalOptions opt;
  opt.beam_size = 4;
  opt.topk = 4;
  const auto report = evaluate(params, records, f.vocab, f.table, opt);

  CHECK(report.rejected == 1);
  CHECK(report.overall.count == 6);
  CHECK(report.overall.count ==
        report.monosyllabic.count + report.polysyllabic.count);
  long long length_total = 0;
  for (const auto& split : report.by_length) length_total += split.count;
  CHECK(length_total == report.overall.count);

  // K-monotonicity and pinyin dominance on every split.
  for (const auto* split :
       {&report.overall, &report.monosyllabic, &report.polysyllabic,
        &report.by_length[0], &report.by_length[1], &report.by_length[2],
        &report.by_length[3]}) {
    CHECK(split->word_mrr[0] <= split->word_mrr[1]);
    CHECK(split->word_mrr[1] <= split->word_mrr[2]);
    for (size_t k = 0; k < 3; ++k) {
      CHECK(split->word_mrr[k] >= 0.0);
      CHECK(split->word_mrr[k] <= 1.0);
      CHECK(split->pinyin_mrr[k] >= split->word_mrr[k]);
    }
  }

  // Split consistency: overall MRR is the count-weighted mean of the
  // monosyllabic and polysyllabic MRRs.
  for (size_t k = 0; k < 3; ++k) {
    const double weighted =
        (report.monosyllabic.word_mrr[k] * report.monosyllabic.count +
         report.polysyllabic.word_mrr[k] * report.polysyllabic.count) /
        report.overall.count;
    CHECK(report.overall.word_mrr[k] == doctest::Approx(weighted).epsilon(1e-12));
  }

  // Deterministic across runs and thread counts.
  const auto again = evaluate(params, records, f.vocab, f.table, opt);
  CHECK(again.overall.word_mrr == report.overall.word_mrr);
  EvalOptions threaded = opt;
  threaded.threads = 2;
  const auto parallel = evaluate(params, records, f.vocab, f.table, threaded);
  CHECK(parallel.overall.word_mrr == report.overall.word_mrr);

  CHECK_THROWS_AS(evaluate(params, {}, f.vocab, f.table, opt),
                  std::invalid_argument);

  // Report renderers mention every split.
  const auto table_text = report.to_table();
  CHECK(table_text.find("monosyllabic") != std::string::npos);
  CHECK(table_text.find("length-4+") != std::string::npos);
  const auto json_text = report.to_json();
  CHECK(json_text.find("pinyin_mrr@10") != std::string::npos);
}

TEST_CASE("bench_qps validates duration and reports liveness") {
  Fixture f;
  const auto params = f.model();
  std::vector<EvalRecord> records;
  EvalRecord rec;
  rec.text = f.corpus[0];
  rec.span_word_index = 0;
  rec.target = f.corpus[0].words[0];
  records.push_back(rec);

  CHECK_THROWS_AS(
      bench_qps(params, records, f.vocab, f.table, 0, 0.0),
      std::invalid_argument);

  EvalOptions opt;
  opt.beam_size = 2;
  opt.topk = 2;
  const auto result = bench_qps(params, records, f.vocab, f.table, 1, 0.3, opt);
  CHECK(result.qps > 0);
  CHECK(std::isfinite(result.qps));
  CHECK(result.completed > 0);
  CHECK(result.parameter_count == parameter_count(params));
  CHECK(result.parameter_bytes == result.parameter_count * 4);
  CHECK(result.peak_rss_bytes > 0);

  const auto again = bench_qps(params, records, f.vocab, f.table, 1, 0.3, opt);
  CHECK(again.parameter_count == result.parameter_count);
}

TEST_CASE("export_routing_stats writes one well-formed CSV per MoE layer") {
  Fixture f;
  ModelConfig c;
  c.num_layers = 2;
  c.hidden_dim = 8;
  c.num_heads = 2;
  c.ffn_dim = 16;
  c.vocab_size = f.vocab.size();
  c.max_position = 32;
  c.moe_plan = {{1, {4, 2}}};
  const auto params = init_model<float>(c, 4);

  MaskingConfig mc;
  mc.mask_prob = 0.3;
  mc.seed = 2;
  std::vector<SegmentedSentence> sentences(f.corpus.begin(), f.corpus.begin() + 3);
  const auto batch = build_batch(sentences, mc, f.table, f.vocab, 14);

  const auto stem = testutil::write_temp("", ".csv");
  const auto written = export_routing_stats(params, batch, {1}, stem, f.vocab);
  REQUIRE(written.size() == 1);

  std::ifstream in(written[0]);
  REQUIRE(in.good());
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("token_id,is_letter_mask,experts,w0,w1,w2,w3", 0) == 0);

  int rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++rows;
    std::vector<std::string> fields;
    std::istringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    REQUIRE(fields.size() == 3u + 4u + 8u + 8u);
    const int token = std::stoi(fields[0]);
    const bool flagged = fields[1] == "1";
    CHECK(flagged == f.vocab.is_letter_mask(token));
    // Exactly top_k experts listed.
    CHECK(std::count(fields[2].begin(), fields[2].end(), '|') == 1);
    double wsum = 0;
    for (int e = 0; e < 4; ++e) wsum += std::stod(fields[3 + size_t(e)]);
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-5));
  }
  long long real_tokens = 0;
  for (int b = 0; b < batch.batch_size(); ++b)
    for (int i = 0; i < batch.width(); ++i)
      if (batch.attention_mask(b, i)) ++real_tokens;
  CHECK(rows == real_tokens);

  CHECK_THROWS_AS(export_routing_stats(params, batch, {0}, stem, f.vocab),
                  std::invalid_argument);
}
