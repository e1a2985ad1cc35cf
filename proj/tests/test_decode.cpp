// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>

#include "pyabbrev/decode.hpp"
#include "test_util.hpp"

using namespace pyab;

namespace {

struct Fixture {
  PinyinTable table;
  std::vector<SegmentedSentence> corpus;
  Vocabulary vocab;

  Fixture() {
    table = load_pinyin_table(testutil::data_dir() / "pinyin_base.tsv");
    // A fixed handful of sentences keeps the character vocabulary small
    // enough for exhaustive-enumeration oracles (and has no 'q' initials).
    for (const char* line :
         {"我们 喜欢 音乐", "你 喝 茶", "他 学习 数学", "老师 看 书",
          "学生 写 小说"})
      corpus.push_back(parse_segmented_line(line, corpus.size() + 1));
    vocab = build_vocabulary(corpus, 1);
  }

  ModelParams<float> model(std::uint64_t seed) const {
    ModelConfig c;
    c.num_layers = 1;
    c.hidden_dim = 16;
    c.num_heads = 2;
    c.ffn_dim = 32;
    c.vocab_size = vocab.size();
    c.max_position = 24;
    c.moe_plan = {{0, {2, 1}}};
    return init_model<float>(c, seed);
  }
};

// The same conditional left-to-right scoring as the decoder, evaluated by
// exhaustive enumeration over all candidate sequences.
std::vector<std::pair<std::vector<int>, double>> exhaustive_rank(
    const ModelParams<float>& params, const std::vector<int>& tokens,
    const Span& span, const std::vector<int>& candidates) {
  std::vector<std::pair<std::vector<int>, double>> scored;

  std::vector<std::vector<int>> sequences{{}};
  for (int t = 0; t < span.length; ++t) {
    std::vector<std::vector<int>> next;
    for (const auto& prefix : sequences)
      for (int c : candidates) {
        auto s = prefix;
        s.push_back(c);
        next.push_back(std::move(s));
      }
    sequences = std::move(next);
  }

  for (const auto& seq : sequences) {
    double score = 0;
    std::vector<int> working = tokens;
    for (int t = 0; t < span.length; ++t) {
      std::vector<int> framed = working;
      framed.insert(framed.begin(), Vocabulary::kCls);
      framed.push_back(Vocabulary::kSep);
      std::vector<int> attn(framed.size(), 1);
      SequenceCache<float> cache;
      forward_sequence(params, framed, attn, cache);
      score += static_cast<double>(
          cache.logprobs(span.start + t + 1, seq[static_cast<size_t>(t)]));
      working[static_cast<size_t>(span.start + t)] = seq[static_cast<size_t>(t)];
    }
    scored.emplace_back(seq, score);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return scored;
}

ConversionQuery letters_query(const Fixture& f, const std::string& letters,
                              const std::vector<int>& context_before,
                              const std::vector<int>& context_after,
                              ConversionOptions opt) {
  ConversionQuery q;
  q.options = opt;
  q.tokens.ids = context_before;
  q.spans.push_back({static_cast<int>(context_before.size()),
                     static_cast<int>(letters.size())});
  for (char c : letters) q.tokens.ids.push_back(letter_mask_id(f.vocab, c));
  for (int id : context_after) q.tokens.ids.push_back(id);
  return q;
}

}  // namespace

TEST_CASE("a single-position span degenerates to top-k of the distribution") {
  Fixture f;
  const auto params = f.model(3);
  ConversionOptions opt;
  opt.beam_size = 16;
  opt.topk = 5;
  const auto context = encode(f.vocab, U"我们喜欢").ids;
  const auto query = letters_query(f, "y", context, {}, opt);
  const auto ranked = convert(params, query, f.vocab, f.table);
  REQUIRE(ranked.spans.size() == 1);
  const auto& entries = ranked.spans[0].entries;
  REQUIRE(entries.size() == 5);

  // Independent top-k over the model's distribution at that position.
  std::vector<int> framed = query.tokens.ids;
  framed.insert(framed.begin(), Vocabulary::kCls);
  framed.push_back(Vocabulary::kSep);
  std::vector<int> attn(framed.size(), 1);
  SequenceCache<float> cache;
  forward_sequence(params, framed, attn, cache);
  const int row = query.spans[0].start + 1;
  std::vector<std::pair<float, int>> scored;
  for (int id = Vocabulary::kNumSpecials; id < f.vocab.size(); ++id)
    scored.emplace_back(cache.logprobs(row, id), id);
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (size_t i = 0; i < entries.size(); ++i)
    CHECK(entries[i].word == f.vocab.token_of(scored[i].second));
}

TEST_CASE("beam search with a saturating beam equals exhaustive enumeration") {
  Fixture f;
  std::vector<int> candidates;
  for (int id = Vocabulary::kNumSpecials; id < f.vocab.size(); ++id)
    candidates.push_back(id);
  REQUIRE(candidates.size() <= 30);

  for (std::uint64_t seed : {101, 102, 103, 104, 105}) {
    const auto params = f.model(seed);
    ConversionOptions opt;
    opt.beam_size = 900;
    opt.topk = 10;
    const auto context = encode(f.vocab, U"我们看").ids;
    const auto after = encode(f.vocab, U"音乐").ids;
    const auto query = letters_query(f, "xx", context, after, opt);
    const auto ranked = convert(params, query, f.vocab, f.table);
    const auto& entries = ranked.spans[0].entries;

    const auto oracle = exhaustive_rank(params, query.tokens.ids,
                                        query.spans[0], candidates);
    REQUIRE(entries.size() == 10);
    for (size_t i = 0; i < entries.size(); ++i) {
      std::u32string expected;
      for (int id : oracle[i].first)
        expected.push_back(f.vocab.character_of(id));
      CHECK(entries[i].word == encode_utf8(expected));
    }
  }
}

TEST_CASE("scores are descending normalized probabilities") {
  Fixture f;
  const auto params = f.model(5);
  ConversionOptions opt;
  opt.beam_size = 8;
  opt.topk = 8;
  const auto query =
      letters_query(f, "xy", encode(f.vocab, U"我们").ids, {}, opt);
  const auto ranked = convert(params, query, f.vocab, f.table);
  const auto& entries = ranked.spans[0].entries;
  REQUIRE(!entries.empty());
  double sum = 0;
  for (size_t i = 0; i < entries.size(); ++i) {
    CHECK(entries[i].score > 0);
    CHECK(entries[i].score <= 1.0);
    if (i) CHECK(entries[i].score <= entries[i - 1].score);
    sum += entries[i].score;
  }
  CHECK(sum <= 1.0 + 1e-9);
}

TEST_CASE("identical queries produce identical rankings") {
  Fixture f;
  const auto params = f.model(6);
  ConversionOptions opt;
  const auto query =
      letters_query(f, "sx", encode(f.vocab, U"学生写").ids, {}, opt);
  const auto a = convert(params, query, f.vocab, f.table);
  const auto b = convert(params, query, f.vocab, f.table);
  REQUIRE(a.spans[0].entries.size() == b.spans[0].entries.size());
  for (size_t i = 0; i < a.spans[0].entries.size(); ++i) {
    CHECK(a.spans[0].entries[i].word == b.spans[0].entries[i].word);
    CHECK(a.spans[0].entries[i].score == b.spans[0].entries[i].score);
  }
}

TEST_CASE("hard filter emits only candidates matching the span letters") {
  Fixture f;
  const auto params = f.model(7);
  ConversionOptions opt;
  opt.hard_filter = true;
  opt.beam_size = 16;
  opt.topk = 10;
  const auto query =
      letters_query(f, "x", encode(f.vocab, U"我们喜欢").ids, {}, opt);
  const auto ranked = convert(params, query, f.vocab, f.table);
  REQUIRE(!ranked.spans[0].entries.empty());
  for (const auto& c : ranked.spans[0].entries) {
    const auto word = decode_utf8(c.word);
    CHECK(abbreviation_of(f.table, word).letters == "x");
  }
}

TEST_CASE("hard filter with an infeasible letter raises NoCandidateError") {
  Fixture f;
  const auto params = f.model(7);
  ConversionOptions opt;
  opt.hard_filter = true;
  // No character in this tiny vocabulary starts with 'q'.
  bool any_q = false;
  for (int id = Vocabulary::kNumSpecials; id < f.vocab.size(); ++id)
    if (f.table.contains(f.vocab.character_of(id)) &&
        initial_of(f.table, f.vocab.character_of(id)) == 'q')
      any_q = true;
  REQUIRE(!any_q);
  const auto query =
      letters_query(f, "q", encode(f.vocab, U"我们").ids, {}, opt);
  CHECK_THROWS_AS(convert(params, query, f.vocab, f.table), NoCandidateError);
}

TEST_CASE("spans must hold mask tokens") {
  Fixture f;
  const auto params = f.model(8);
  ConversionQuery query;
  query.tokens = encode(f.vocab, U"我们喜欢");
  query.spans.push_back({1, 2});
  CHECK_THROWS_AS(convert(params, query, f.vocab, f.table),
                  std::invalid_argument);

  // Plain [MASK] is accepted only when explicitly allowed.
  ConversionQuery plain;
  plain.tokens = encode(f.vocab, U"我们喜欢");
  plain.tokens.ids[1] = Vocabulary::kMask;
  plain.spans.push_back({1, 1});
  CHECK_THROWS_AS(convert(params, plain, f.vocab, f.table),
                  std::invalid_argument);
  plain.options.allow_plain_mask = true;
  CHECK_NOTHROW(convert(params, plain, f.vocab, f.table));
}

TEST_CASE("one-shot mode matches refined decoding on single positions") {
  Fixture f;
  const auto params = f.model(9);
  ConversionOptions refined;
  ConversionOptions one_shot;
  one_shot.one_shot = true;
  const auto context = encode(f.vocab, U"你喜欢").ids;
  const auto a =
      convert(params, letters_query(f, "s", context, {}, refined), f.vocab, f.table);
  const auto b =
      convert(params, letters_query(f, "s", context, {}, one_shot), f.vocab, f.table);
  REQUIRE(a.spans[0].entries.size() == b.spans[0].entries.size());
  for (size_t i = 0; i < a.spans[0].entries.size(); ++i)
    CHECK(a.spans[0].entries[i].word == b.spans[0].entries[i].word);
}

TEST_CASE("parse_query reads the braced abbreviation syntax") {
  Fixture f;
  const auto query = parse_query(f.vocab, "因为学业繁重，所以我{fq}了音乐");
  REQUIRE(query.spans.size() == 1);
  CHECK(query.spans[0].length == 2);
  CHECK(query.spans[0].start == 10);
  CHECK(query.tokens.ids[10] == letter_mask_id(f.vocab, 'f'));
  CHECK(query.tokens.ids[11] == letter_mask_id(f.vocab, 'q'));

  const auto single = parse_query(f.vocab, "{x}");
  CHECK(single.spans.size() == 1);
  CHECK(single.spans[0].length == 1);
  CHECK(single.tokens.size() == 1);

  CHECK_THROWS_AS(parse_query(f.vocab, "no braces here"), DataError);
  CHECK_THROWS_AS(parse_query(f.vocab, "{}"), DataError);
  CHECK_THROWS_AS(parse_query(f.vocab, "我{F}你"), DataError);
  CHECK_THROWS_AS(parse_query(f.vocab, "我{fq你"), DataError);
  CHECK_THROWS_AS(parse_query(f.vocab, "我fq}你"), DataError);
}

TEST_CASE("multiple spans are resolved in order") {
  Fixture f;
  const auto params = f.model(10);
  ConversionOptions opt;
  opt.beam_size = 4;
  opt.topk = 3;
  const auto ranked =
      convert_text(params, "我{x}喜欢{s}", f.vocab, f.table, opt);
  REQUIRE(ranked.spans.size() == 2);
  CHECK(!ranked.spans[0].entries.empty());
  CHECK(!ranked.spans[1].entries.empty());
  for (const auto& span : ranked.spans)
    for (const auto& c : span.entries) CHECK(decode_utf8(c.word).size() == 1);
}
