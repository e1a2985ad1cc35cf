// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "pyabbrev/gradients.hpp"
#include "pyabbrev/model.hpp"

namespace pyab {

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 300;
  double warmup_epochs = 1.0;  // linear warmup span, then constant rate
  int batch_size = 16;
  std::uint64_t seed = 42;
  double weight_decay = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int max_len = 128;  // batches are built at the tightest width <= this
  MaskingConfig masking;

  void validate() const {
    if (learning_rate < 0) throw std::invalid_argument("learning_rate < 0");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (warmup_epochs < 0) throw std::invalid_argument("warmup_epochs < 0");
    masking.validate();
  }
};

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0;  // per-masked-position mean over the epoch
  double sum_loss = 0;   // raw summed loss over the epoch
  long long masked_positions = 0;
  double learning_rate = 0;
};

struct TrainResult {
  std::vector<EpochStats> history;
  bool aborted_on_divergence = false;
  int completed_epochs = 0;
};

/**
 * AdamW over the per-masked-position mean loss, fresh whole-word masks
 * every epoch, linear warmup then constant learning rate. Deterministic
 * under a fixed seed in single-threaded execution. On a non-finite loss,
 * parameters are restored to the last completed epoch and training stops.
 */
template <class S>
TrainResult train(ModelParams<S>& params,
                  const std::vector<SegmentedSentence>& corpus,
                  const PinyinTable& table, const Vocabulary& vocab,
                  const TrainConfig& config,
                  const std::function<void(const EpochStats&)>& on_epoch = {}) {
  config.validate();
  if (corpus.empty()) throw std::invalid_argument("train: empty corpus");

  ModelParams<S> m = zeros_like(params);
  ModelParams<S> v = zeros_like(params);
  auto params_t = named_tensors(params);
  auto m_t = named_tensors(m);
  auto v_t = named_tensors(v);

  const int steps_per_epoch =
      (static_cast<int>(corpus.size()) + config.batch_size - 1) /
      config.batch_size;
  const long long warmup_steps = std::max<long long>(
      1, std::llround(config.warmup_epochs * steps_per_epoch));

  std::mt19937_64 rng(config.seed);
  TrainResult result;
  ModelParams<S> last_good = params;
  long long step = 0;

  std::vector<size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), size_t{0});

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochStats stats;
    stats.epoch = epoch;

    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(config.batch_size)) {
      const size_t end = std::min(order.size(),
                                  start + static_cast<size_t>(config.batch_size));
      std::vector<SegmentedSentence> sentences;
      size_t longest = 0;
      for (size_t i = start; i < end; ++i) {
        sentences.push_back(corpus[order[i]]);
        longest = std::max(longest, sentences.back().char_count());
      }
      const int width = std::min<int>(config.max_len,
                                      static_cast<int>(longest) + 2);

      MaskedBatch batch =
          build_batch(sentences, config.masking, table, vocab, width, rng);

      ++step;
      const double lr =
          config.learning_rate *
          std::min(1.0, static_cast<double>(step) / static_cast<double>(warmup_steps));
      stats.learning_rate = lr;

      GradientResult<S> g;
      try {
        g = compute_gradients<S>(params, batch);
      } catch (const NumericError&) {
        params = last_good;
        result.aborted_on_divergence = true;
        return result;
      }
      if (!std::isfinite(static_cast<double>(g.loss.sum))) {
        params = last_good;
        result.aborted_on_divergence = true;
        return result;
      }
      stats.sum_loss += static_cast<double>(g.loss.sum);
      stats.masked_positions += g.loss.masked_count;

      if (g.loss.no_masked_positions) continue;

      auto g_t = named_tensors(g.grads);
      const double bc1 = 1.0 - std::pow(config.adam_beta1, double(step));
      const double bc2 = 1.0 - std::pow(config.adam_beta2, double(step));
      for (size_t t = 0; t < params_t.size(); ++t) {
        auto theta = params_t[t].flat();
        auto grad = g_t[t].flat();
        auto m1 = m_t[t].flat();
        auto m2 = v_t[t].flat();
        m1 = S(config.adam_beta1) * m1 + S(1 - config.adam_beta1) * grad;
        m2 = S(config.adam_beta2) * m2.array().matrix() +
             S(1 - config.adam_beta2) * grad.cwiseProduct(grad);
        // Decoupled weight decay on matrices only (embeddings, projections);
        // biases, layer norms and combine logits are left undecayed.
        if (config.weight_decay > 0 && params_t[t].is_matrix())
          theta -= S(lr * config.weight_decay) * theta;
        theta -= (S(lr) * (m1 / S(bc1)).array() /
                  ((m2 / S(bc2)).array().sqrt() + S(config.adam_eps)))
                     .matrix();
      }
    }

    stats.mean_loss = stats.masked_positions > 0
                          ? stats.sum_loss / double(stats.masked_positions)
                          : 0.0;
    result.history.push_back(stats);
    result.completed_epochs = epoch + 1;
    last_good = params;
    if (on_epoch) on_epoch(stats);
  }
  return result;
}

}  // namespace pyab
