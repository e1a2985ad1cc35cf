// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "pyabbrev/gradients.hpp"
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
    // Small vocabulary: first 12 sentences only.
    corpus.resize(12);
    vocab = build_vocabulary(corpus, 1);
  }
};

ModelConfig grad_check_config(int vocab_size) {
  ModelConfig c;
  c.num_layers = 2;
  c.hidden_dim = 8;
  c.num_heads = 2;
  c.ffn_dim = 16;
  c.vocab_size = vocab_size;
  c.max_position = 24;
  c.moe_plan = {{1, {2, 1}}};
  return c;
}

// Central finite differences of the mean masked loss, step 1e-5.
double fd_loss(ModelParams<double>& params, const MaskedBatch& batch) {
  return static_cast<double>(mlm_loss(forward(params, batch), batch).mean);
}

}  // namespace

TEST_CASE("analytic gradients match central finite differences per group") {
  Fixture f;
  auto params = init_model<double>(grad_check_config(f.vocab.size()), 17);

  MaskingConfig mc;
  mc.mask_prob = 0.4;
  mc.seed = 21;
  std::vector<SegmentedSentence> sentences(f.corpus.begin(), f.corpus.begin() + 3);
  const auto batch = build_batch(sentences, mc, f.table, f.vocab, 12);
  REQUIRE(batch.masked_count() >= 2);

  const auto analytic = compute_gradients(params, batch);
  auto grads = const_cast<ModelParams<double>&>(analytic.grads);
  auto grad_tensors = named_tensors(grads);
  auto param_tensors = named_tensors(params);

  const double step = 1e-5;
  for (size_t t = 0; t < param_tensors.size(); ++t) {
    auto theta = param_tensors[t].flat();
    auto analytic_flat = grad_tensors[t].flat();
    Vec<double> fd(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      const double saved = theta[i];
      theta[i] = saved + step;
      const double up = fd_loss(params, batch);
      theta[i] = saved - step;
      const double down = fd_loss(params, batch);
      theta[i] = saved;
      fd[i] = (up - down) / (2 * step);
    }
    const double denom = std::max(fd.norm(), 1e-12);
    const double rel = (analytic_flat - fd).norm() / denom;
    INFO("parameter group ", param_tensors[t].name, " rel err ", rel);
    CHECK(rel < 1e-4);
  }
}

TEST_CASE("a batch with no masked positions yields all-zero gradients") {
  Fixture f;
  auto params = init_model<double>(grad_check_config(f.vocab.size()), 17);
  MaskingConfig mc;
  mc.mask_prob = 0.0;
  std::vector<SegmentedSentence> sentences(f.corpus.begin(), f.corpus.begin() + 2);
  const auto batch = build_batch(sentences, mc, f.table, f.vocab, 12);

  auto result = compute_gradients(params, batch);
  CHECK(result.loss.no_masked_positions);
  for (auto& t : named_tensors(result.grads))
    CHECK(t.flat().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("doubling the loss scale doubles every gradient") {
  Fixture f;
  auto params = init_model<double>(grad_check_config(f.vocab.size()), 17);
  MaskingConfig mc;
  mc.mask_prob = 0.4;
  mc.seed = 4;
  std::vector<SegmentedSentence> sentences(f.corpus.begin(), f.corpus.begin() + 2);
  const auto batch = build_batch(sentences, mc, f.table, f.vocab, 12);

  auto g1 = compute_gradients(params, batch, 1.0);
  auto g2 = compute_gradients(params, batch, 2.0);
  auto t1 = named_tensors(g1.grads);
  auto t2 = named_tensors(g2.grads);
  for (size_t i = 0; i < t1.size(); ++i) {
    const double diff =
        (t2[i].flat() - 2.0 * t1[i].flat()).cwiseAbs().maxCoeff();
    CHECK(diff <= 1e-12 * std::max(1.0, t1[i].flat().cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("experts outside the TopK selection receive zero routed gradient") {
  Fixture f;
  auto params = init_model<double>(grad_check_config(f.vocab.size()), 17);
  // Pin the router so expert 0 wins for every token.
  auto& moe = *params.layers[1].moe;
  moe.router_w.setZero();
  moe.router_b << 10.0, -10.0;

  MaskingConfig mc;
  mc.mask_prob = 0.4;
  mc.seed = 8;
  std::vector<SegmentedSentence> sentences(f.corpus.begin(), f.corpus.begin() + 3);
  const auto batch = build_batch(sentences, mc, f.table, f.vocab, 12);
  REQUIRE(batch.masked_count() > 0);

  auto result = compute_gradients(params, batch);
  const auto& g = *result.grads.layers[1].moe;
  CHECK(g.experts[1].w1.cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.experts[1].b1.cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.experts[1].w2.cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.experts[1].b2.cwiseAbs().maxCoeff() == 0.0);
  // The selected expert and the router do train.
  CHECK(g.experts[0].w1.cwiseAbs().maxCoeff() > 0.0);
  CHECK(g.router_w.cwiseAbs().maxCoeff() > 0.0);
  CHECK(g.combine.cwiseAbs().maxCoeff() > 0.0);
}
