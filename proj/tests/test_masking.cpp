// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>

#include "pyabbrev/errors.hpp"
#include "pyabbrev/masking.hpp"
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
};

// Word spans (start, length) in character positions of a sentence.
std::vector<std::pair<int, int>> word_spans(const SegmentedSentence& s) {
  std::vector<std::pair<int, int>> spans;
  int pos = 0;
  for (const auto& w : s.words) {
    spans.emplace_back(pos, static_cast<int>(w.size()));
    pos += static_cast<int>(w.size());
  }
  return spans;
}

}  // namespace

TEST_CASE("mask_prob 0 never selects; mask_prob 1 selects every maskable word") {
  Fixture f;
  std::mt19937_64 rng(1);
  const auto sentence = parse_segmented_line("我们 喜欢 音乐", 1);

  MaskingConfig zero;
  zero.mask_prob = 0.0;
  for (int i = 0; i < 50; ++i)
    CHECK(select_words(sentence, zero, f.table, rng).empty());

  MaskingConfig all;
  all.mask_prob = 1.0;
  for (int i = 0; i < 50; ++i)
    CHECK(select_words(sentence, all, f.table, rng) ==
          std::vector<int>{0, 1, 2});
}

TEST_CASE("polysyllabic boost weights the conditional selection 4:1") {
  // One 1-char word and one 2-char word, poly_boost 2: weights are 1 and 4,
  // so when exactly one word is drawn it is the 2-char word 4/5 of the time.
  // Brute-force frequency estimate over 1e5 trials, tolerance +/- 2%.
  Fixture f;
  const auto sentence = parse_segmented_line("茶 音乐", 1);
  MaskingConfig config;
  config.mask_prob = 2.0 / 3.0;  // character budget of exactly 2
  config.poly_boost = 2.0;

  std::mt19937_64 rng(12345);
  int single = 0, two_char = 0;
  for (int trial = 0; trial < 100000; ++trial) {
    const auto selected = select_words(sentence, config, f.table, rng);
    if (selected.size() == 1) {
      ++single;
      if (selected[0] == 1) ++two_char;
    }
  }
  REQUIRE(single > 0);
  const double fraction = double(two_char) / double(single);
  CHECK(fraction == doctest::Approx(0.8).epsilon(0.025));
}

TEST_CASE("words with unreadable characters are never selected") {
  Fixture f;
  // "x9" has no pinyin readings; the other word must carry all masking.
  auto sentence = parse_segmented_line("x9 音乐", 1);
  MaskingConfig config;
  config.mask_prob = 1.0;
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i)
    CHECK(select_words(sentence, config, f.table, rng) == std::vector<int>{1});
}

TEST_CASE("apply_multi_mask replaces selected words by letter-mask tokens") {
  Fixture f;
  const auto sentence = parse_segmented_line("谈 梦想 吗", 1);
  const auto masked = apply_multi_mask(sentence, {1}, f.table, f.vocab);
  CHECK(masked.input.ids[0] == f.vocab.char_id(U'谈'));
  CHECK(masked.input.ids[1] == letter_mask_id(f.vocab, 'm'));
  CHECK(masked.input.ids[2] == letter_mask_id(f.vocab, 'x'));
  CHECK(masked.input.ids[3] == f.vocab.char_id(U'吗'));
  CHECK(masked.targets[1] == f.vocab.char_id(U'梦'));
  CHECK(masked.targets[2] == f.vocab.char_id(U'想'));
  CHECK(masked.letters[1] == 'm' - 'a');
  CHECK(masked.letters[2] == 'x' - 'a');
  CHECK(masked.targets[0] == kIgnoreTarget);
  CHECK(masked.targets[3] == kIgnoreTarget);
}

TEST_CASE("a four-character idiom maps to four letter masks") {
  PinyinTable table;
  table.add(U'一', {"yi"});
  table.add(U'无', {"wu"});
  table.add(U'是', {"shi"});
  table.add(U'处', {"chu"});
  Vocabulary vocab;
  for (char32_t c : std::u32string(U"一无是处")) vocab.add_character(c);
  const auto sentence = parse_segmented_line("一无是处", 1);
  const auto masked = apply_multi_mask(sentence, {0}, table, vocab);
  CHECK(masked.input.ids == std::vector<int>{letter_mask_id(vocab, 'y'),
                                             letter_mask_id(vocab, 'w'),
                                             letter_mask_id(vocab, 's'),
                                             letter_mask_id(vocab, 'c')});
}

TEST_CASE("empty selection leaves the encoding untouched") {
  Fixture f;
  const auto sentence = parse_segmented_line("我们 喜欢 音乐", 1);
  const auto masked = apply_multi_mask(sentence, {}, f.table, f.vocab);
  CHECK(masked.input == encode(f.vocab, sentence.text()));
  for (int t : masked.targets) CHECK(t == kIgnoreTarget);
}

TEST_CASE("single-mask style substitutes plain [MASK] everywhere") {
  Fixture f;
  const auto sentence = parse_segmented_line("谈 梦想 吗", 1);
  const auto masked = apply_multi_mask(sentence, {1}, f.table, f.vocab,
                                       MaskStyle::kSingleMask);
  CHECK(masked.input.ids[1] == Vocabulary::kMask);
  CHECK(masked.input.ids[2] == Vocabulary::kMask);
  CHECK(masked.targets[1] == f.vocab.char_id(U'梦'));
}

TEST_CASE("build_batch frames, pads and stays deterministic under a seed") {
  Fixture f;
  const std::vector<SegmentedSentence> sentences = {
      parse_segmented_line("我们 喜欢 音乐", 1),
      parse_segmented_line("你 喝 茶", 2),
  };
  MaskingConfig config;
  config.seed = 9;
  const auto batch = build_batch(sentences, config, f.table, f.vocab, 12);
  CHECK(batch.batch_size() == 2);
  CHECK(batch.width() == 12);
  CHECK(batch.input_ids(0, 0) == Vocabulary::kCls);
  CHECK(batch.input_ids(0, 7) == Vocabulary::kSep);
  CHECK(batch.input_ids(1, 4) == Vocabulary::kSep);
  // Padding aligns with attention zeros.
  for (int i = 0; i < batch.width(); ++i) {
    CHECK((batch.input_ids(1, i) == Vocabulary::kPad) ==
          (batch.attention_mask(1, i) == 0));
  }
  // Fixed seed reproduces the batch bit for bit.
  CHECK(batch == build_batch(sentences, config, f.table, f.vocab, 12));
}

TEST_CASE("mask_prob 0 batches carry no targets") {
  Fixture f;
  MaskingConfig config;
  config.mask_prob = 0;
  const auto batch = build_batch({parse_segmented_line("我们 喜欢 音乐", 1)},
                                 config, f.table, f.vocab, 10);
  CHECK(batch.masked_count() == 0);
}

TEST_CASE("build_batch rejects an empty sentence list") {
  Fixture f;
  CHECK_THROWS_AS(build_batch({}, {}, f.table, f.vocab, 10),
                  std::invalid_argument);
}

TEST_CASE("truncation respects word boundaries") {
  Fixture f;
  const auto sentence = parse_segmented_line("我们 喜欢 音乐", 1);
  MaskingConfig config;
  config.mask_prob = 0;
  // Width 7 leaves room for [CLS] + 5 characters: only 我们 + 喜欢 fit.
  const auto batch = build_batch({sentence}, config, f.table, f.vocab, 7);
  CHECK(batch.input_ids(0, 5) == Vocabulary::kSep);
  CHECK(batch.input_ids(0, 6) == Vocabulary::kPad);
  const auto prefix = encode(f.vocab, U"我们喜欢");
  for (int i = 0; i < 4; ++i) CHECK(batch.input_ids(0, i + 1) == prefix.ids[i]);
}

TEST_CASE("masking invariants hold over ten thousand sentences") {
  Fixture f;
  MaskingConfig config;
  config.mask_prob = 0.15;
  config.seed = 77;
  std::mt19937_64 rng(config.seed);

  long long total_chars = 0, masked_chars = 0;
  for (int round = 0; round < 50; ++round) {
    for (const auto& sentence : f.corpus) {
      const auto selected = select_words(sentence, config, f.table, rng, &f.vocab);
      const auto masked = apply_multi_mask(sentence, selected, f.table, f.vocab);
      total_chars += static_cast<long long>(sentence.char_count());

      // Whole-word coverage: masked positions are a union of word spans.
      std::vector<bool> is_masked(masked.targets.size());
      for (size_t i = 0; i < masked.targets.size(); ++i)
        is_masked[i] = masked.targets[i] != kIgnoreTarget;
      for (const auto& [start, len] : word_spans(sentence)) {
        bool any = false, all = true;
        for (int i = start; i < start + len; ++i) {
          any |= is_masked[static_cast<size_t>(i)];
          all &= is_masked[static_cast<size_t>(i)];
        }
        CHECK(any == all);
      }

      const std::u32string text = sentence.text();
      for (size_t i = 0; i < masked.targets.size(); ++i) {
        if (masked.targets[i] == kIgnoreTarget) {
          // Never a random replacement: unmasked positions keep their token.
          CHECK(masked.input.ids[i] == f.vocab.char_id(text[i]));
          continue;
        }
        ++masked_chars;
        // Letter consistency against the table.
        const char letter = initial_of(f.table, text[i]);
        CHECK(masked.input.ids[i] == letter_mask_id(f.vocab, letter));
        CHECK(masked.letters[i] == letter - 'a');
        // No leakage of the gold id.
        CHECK(masked.input.ids[i] != masked.targets[i]);
        CHECK(masked.targets[i] == f.vocab.char_id(text[i]));
      }
    }
  }
  const double rate = double(masked_chars) / double(total_chars);
  CHECK(rate > 0.13);
  CHECK(rate < 0.17);
}
