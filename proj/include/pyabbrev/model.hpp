// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pyabbrev/errors.hpp"
#include "pyabbrev/masking.hpp"
#include "pyabbrev/model_config.hpp"
#include "pyabbrev/nn.hpp"

namespace pyab {

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

template <class S>
struct FfnParams {
  Mat<S> w1;  // hidden x ffn
  Vec<S> b1;  // ffn
  Mat<S> w2;  // ffn x hidden
  Vec<S> b2;  // hidden
};

template <class S>
struct AttentionParams {
  Mat<S> wq, wk, wv, wo;  // hidden x hidden
  Vec<S> bq, bk, bv, bo;  // hidden
};

template <class S>
struct LayerNormParams {
  Vec<S> gamma;
  Vec<S> beta;
};

/**
 * One mixture-of-experts block: a router producing per-expert affinities,
 * `num_experts` routed expert FFNs, one always-active shared expert, and
 * the two combine logits [a, b] whose softmax gives the shared/routed
 * mixing weights (alpha, beta).
 */
template <class S>
struct MoeLayerParams {
  Mat<S> router_w;  // hidden x num_experts
  Vec<S> router_b;  // num_experts
  std::vector<FfnParams<S>> experts;
  FfnParams<S> shared_expert;
  Vec<S> combine;  // [a, b]
  int top_k = 1;

  int num_experts() const { return static_cast<int>(experts.size()); }
};

template <class S>
struct EncoderLayerParams {
  AttentionParams<S> attn;
  LayerNormParams<S> ln1, ln2;
  std::optional<FfnParams<S>> ffn;      // exactly one of ffn/moe is set
  std::optional<MoeLayerParams<S>> moe;
};

template <class S>
struct ModelParams {
  ModelConfig config;
  Mat<S> tok_emb;  // vocab x hidden; also the tied MLM output projection
  Mat<S> pos_emb;  // max_position x hidden
  LayerNormParams<S> ln_emb;
  std::vector<EncoderLayerParams<S>> layers;
  Vec<S> mlm_bias;  // vocab
};

// ---------------------------------------------------------------------------
// Named-tensor traversal (checkpointing, optimizer state, gradient checks)
// ---------------------------------------------------------------------------

template <class S>
struct NamedTensor {
  std::string name;
  Mat<S>* mat = nullptr;
  Vec<S>* vec = nullptr;

  Eigen::Index size() const { return mat ? mat->size() : vec->size(); }
  S* data() const { return mat ? mat->data() : vec->data(); }
  Eigen::Map<Vec<S>> flat() const {
    return Eigen::Map<Vec<S>>(data(), size());
  }
  bool is_matrix() const { return mat != nullptr; }
};

template <class S>
void collect_ffn(std::vector<NamedTensor<S>>& out, const std::string& prefix,
                 FfnParams<S>& f) {
  out.push_back({prefix + ".w1", &f.w1, nullptr});
  out.push_back({prefix + ".b1", nullptr, &f.b1});
  out.push_back({prefix + ".w2", &f.w2, nullptr});
  out.push_back({prefix + ".b2", nullptr, &f.b2});
}

/**
 * Every trainable tensor with a stable, order-deterministic name. Parameter
 * containers with identical configs yield identical orderings, so parallel
 * structures (gradients, optimizer moments) can be zipped by index.
 */
template <class S>
std::vector<NamedTensor<S>> named_tensors(ModelParams<S>& p) {
  std::vector<NamedTensor<S>> out;
  out.push_back({"tok_emb", &p.tok_emb, nullptr});
  out.push_back({"pos_emb", &p.pos_emb, nullptr});
  out.push_back({"ln_emb.gamma", nullptr, &p.ln_emb.gamma});
  out.push_back({"ln_emb.beta", nullptr, &p.ln_emb.beta});
  for (size_t i = 0; i < p.layers.size(); ++i) {
    const std::string lp = "layer" + std::to_string(i);
    auto& layer = p.layers[i];
    out.push_back({lp + ".attn.wq", &layer.attn.wq, nullptr});
    out.push_back({lp + ".attn.bq", nullptr, &layer.attn.bq});
    out.push_back({lp + ".attn.wk", &layer.attn.wk, nullptr});
    out.push_back({lp + ".attn.bk", nullptr, &layer.attn.bk});
    out.push_back({lp + ".attn.wv", &layer.attn.wv, nullptr});
    out.push_back({lp + ".attn.bv", nullptr, &layer.attn.bv});
    out.push_back({lp + ".attn.wo", &layer.attn.wo, nullptr});
    out.push_back({lp + ".attn.bo", nullptr, &layer.attn.bo});
    out.push_back({lp + ".ln1.gamma", nullptr, &layer.ln1.gamma});
    out.push_back({lp + ".ln1.beta", nullptr, &layer.ln1.beta});
    if (layer.ffn) collect_ffn(out, lp + ".ffn", *layer.ffn);
    if (layer.moe) {
      auto& moe = *layer.moe;
      out.push_back({lp + ".moe.router_w", &moe.router_w, nullptr});
      out.push_back({lp + ".moe.router_b", nullptr, &moe.router_b});
      out.push_back({lp + ".moe.combine", nullptr, &moe.combine});
      for (size_t e = 0; e < moe.experts.size(); ++e)
        collect_ffn(out, lp + ".moe.expert" + std::to_string(e), moe.experts[e]);
      collect_ffn(out, lp + ".moe.shared", moe.shared_expert);
    }
    out.push_back({lp + ".ln2.gamma", nullptr, &layer.ln2.gamma});
    out.push_back({lp + ".ln2.beta", nullptr, &layer.ln2.beta});
  }
  out.push_back({"mlm_bias", nullptr, &p.mlm_bias});
  return out;
}

template <class S>
long long parameter_count(const ModelParams<S>& p) {
  auto& mut = const_cast<ModelParams<S>&>(p);
  long long n = 0;
  for (const auto& t : named_tensors(mut)) n += t.size();
  return n;
}

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

namespace detail {

template <class S>
void fill_normal(Mat<S>& m, std::mt19937_64& rng, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = static_cast<S>(dist(rng));
}

template <class S>
FfnParams<S> init_ffn(int hidden, int ffn, std::mt19937_64& rng, double stddev) {
  FfnParams<S> f;
  f.w1.resize(hidden, ffn);
  f.w2.resize(ffn, hidden);
  fill_normal(f.w1, rng, stddev);
  fill_normal(f.w2, rng, stddev);
  f.b1 = Vec<S>::Zero(ffn);
  f.b2 = Vec<S>::Zero(hidden);
  return f;
}

template <class S>
MoeLayerParams<S> init_moe(const ModelConfig& c, const MoeSpec& spec,
                           std::mt19937_64& rng, double stddev) {
  MoeLayerParams<S> moe;
  moe.top_k = spec.top_k;
  moe.router_w.resize(c.hidden_dim, spec.num_experts);
  fill_normal(moe.router_w, rng, stddev);
  moe.router_b = Vec<S>::Zero(spec.num_experts);
  for (int e = 0; e < spec.num_experts; ++e)
    moe.experts.push_back(init_ffn<S>(c.hidden_dim, c.ffn_dim, rng, stddev));
  moe.shared_expert = init_ffn<S>(c.hidden_dim, c.ffn_dim, rng, stddev);
  moe.combine = Vec<S>::Zero(2);
  return moe;
}

}  // namespace detail

template <class S>
ModelParams<S> init_model(const ModelConfig& config, std::uint64_t seed,
                          double init_stddev = 0.02) {
  config.validate();
  std::mt19937_64 rng(seed);
  ModelParams<S> p;
  p.config = config;
  p.tok_emb.resize(config.vocab_size, config.hidden_dim);
  p.pos_emb.resize(config.max_position, config.hidden_dim);
  detail::fill_normal(p.tok_emb, rng, init_stddev);
  detail::fill_normal(p.pos_emb, rng, init_stddev);
  p.ln_emb = {Vec<S>::Ones(config.hidden_dim), Vec<S>::Zero(config.hidden_dim)};
  for (int l = 0; l < config.num_layers; ++l) {
    EncoderLayerParams<S> layer;
    const int d = config.hidden_dim;
    for (Mat<S>* w : {&layer.attn.wq, &layer.attn.wk, &layer.attn.wv,
                      &layer.attn.wo}) {
      w->resize(d, d);
      detail::fill_normal(*w, rng, init_stddev);
    }
    layer.attn.bq = Vec<S>::Zero(d);
    layer.attn.bk = Vec<S>::Zero(d);
    layer.attn.bv = Vec<S>::Zero(d);
    layer.attn.bo = Vec<S>::Zero(d);
    layer.ln1 = {Vec<S>::Ones(d), Vec<S>::Zero(d)};
    layer.ln2 = {Vec<S>::Ones(d), Vec<S>::Zero(d)};
    auto it = config.moe_plan.find(l);
    if (it == config.moe_plan.end())
      layer.ffn = detail::init_ffn<S>(d, config.ffn_dim, rng, init_stddev);
    else
      layer.moe = detail::init_moe<S>(config, it->second, rng, init_stddev);
    p.layers.push_back(std::move(layer));
  }
  p.mlm_bias = Vec<S>::Zero(config.vocab_size);
  return p;
}

// Same structure as `like`, every tensor zeroed.
template <class S>
ModelParams<S> zeros_like(const ModelParams<S>& like) {
  ModelParams<S> z = like;
  for (auto& t : named_tensors(z)) t.flat().setZero();
  return z;
}

// ---------------------------------------------------------------------------
// MoE forward
// ---------------------------------------------------------------------------

template <class S>
struct MoeTokenCache {
  Vec<S> input;
  Vec<S> weights;  // softmaxed router output over all experts
  std::vector<int> top;
  std::vector<Vec<S>> expert_z, expert_act, expert_out;  // per selected expert
  Vec<S> shared_z, shared_act, shared_out;
  Vec<S> routed;
  S alpha, beta;
};

namespace detail {

template <class S>
Vec<S> ffn_apply(const FfnParams<S>& f, const Vec<S>& x, Vec<S>* z_out = nullptr,
                 Vec<S>* act_out = nullptr) {
  Vec<S> z = f.w1.transpose() * x + f.b1;
  Vec<S> act = z.unaryExpr([](S v) { return gelu(v); });
  if (z_out) *z_out = z;
  if (act_out) *act_out = act;
  return f.w2.transpose() * act + f.b2;
}

// Indices of the top_k largest weights; ties go to the lower expert index.
template <class S>
std::vector<int> top_k_indices(const Vec<S>& weights, int top_k) {
  std::vector<int> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (weights[a] != weights[b]) return weights[a] > weights[b];
    return a < b;
  });
  order.resize(static_cast<size_t>(top_k));
  std::sort(order.begin(), order.end());
  return order;
}

template <class S>
Vec<S> moe_forward_cached(const MoeLayerParams<S>& layer, const Vec<S>& x,
                          MoeTokenCache<S>& cache) {
  cache.input = x;
  const Vec<S> logits = layer.router_w.transpose() * x + layer.router_b;
  cache.weights = softmax(logits);
  cache.top = top_k_indices(cache.weights, layer.top_k);

  cache.routed = Vec<S>::Zero(x.size());
  cache.expert_z.clear();
  cache.expert_act.clear();
  cache.expert_out.clear();
  for (int e : cache.top) {
    Vec<S> z, act;
    Vec<S> out = ffn_apply(layer.experts[e], x, &z, &act);
    cache.routed += cache.weights[e] * out;
    cache.expert_z.push_back(std::move(z));
    cache.expert_act.push_back(std::move(act));
    cache.expert_out.push_back(std::move(out));
  }

  cache.shared_out =
      ffn_apply(layer.shared_expert, x, &cache.shared_z, &cache.shared_act);
  const Vec<S> ab = softmax(layer.combine);
  cache.alpha = ab[0];
  cache.beta = ab[1];
  return cache.alpha * cache.shared_out + cache.beta * cache.routed;
}

}  // namespace detail

/**
 * Output(x) = alpha * SharedExpert(x) + beta * sum_{i in TopK} w_i * Expert_i(x)
 * with w = softmax(router(x)) and (alpha, beta) = softmax(combine). The
 * selected weights are the raw softmax values; they are not renormalized
 * after the TopK cut.
 */
template <class S>
Vec<S> moe_forward(const MoeLayerParams<S>& layer, const Vec<S>& x) {
  if (x.size() != layer.router_w.rows())
    throw std::invalid_argument("moe_forward: input dimension mismatch");
  if (!x.allFinite()) throw NumericError("moe_forward: non-finite input");
  MoeTokenCache<S> cache;
  return detail::moe_forward_cached(layer, x, cache);
}

// ---------------------------------------------------------------------------
// Encoder forward
// ---------------------------------------------------------------------------

template <class S>
struct LayerNormCache {
  Mat<S> xhat;      // normalized rows
  Vec<S> inv_std;   // per row
};

template <class S>
struct AttentionCache {
  Mat<S> q, k, v;            // n x hidden
  std::vector<Mat<S>> probs; // per head, n x n
  Mat<S> context;            // n x hidden
};

template <class S>
struct FfnCache {
  Mat<S> z;    // pre-activation, n x ffn
  Mat<S> act;  // gelu(z)
};

template <class S>
struct LayerCache {
  Mat<S> input;  // layer input H
  AttentionCache<S> attn;
  Mat<S> attn_out;
  Mat<S> resid1;  // H + attn_out
  LayerNormCache<S> ln1;
  Mat<S> h1;  // LN1(resid1)
  std::optional<FfnCache<S>> ffn;
  std::vector<MoeTokenCache<S>> moe;  // one per token row
  Mat<S> ffn_out;
  Mat<S> resid2;
  LayerNormCache<S> ln2;
  Mat<S> h2;
};

template <class S>
struct SequenceCache {
  std::vector<int> ids;
  std::vector<int> attn;  // 1 = real token
  Mat<S> x0;              // tok + pos embedding
  LayerNormCache<S> ln_emb;
  Mat<S> e0;
  std::vector<LayerCache<S>> layers;
  Mat<S> logits;    // n x vocab
  Mat<S> logprobs;  // n x vocab
};

namespace detail {

constexpr double kLayerNormEps = 1e-5;

template <class S>
Mat<S> layer_norm(const LayerNormParams<S>& ln, const Mat<S>& x,
                  LayerNormCache<S>& cache) {
  const Eigen::Index n = x.rows(), d = x.cols();
  cache.xhat.resize(n, d);
  cache.inv_std.resize(n);
  Mat<S> out(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const S mean = x.row(i).mean();
    const S var = (x.row(i).array() - mean).square().mean();
    const S inv = S(1) / std::sqrt(var + S(kLayerNormEps));
    cache.inv_std[i] = inv;
    cache.xhat.row(i) = (x.row(i).array() - mean) * inv;
    out.row(i) = cache.xhat.row(i).cwiseProduct(ln.gamma.transpose()) +
                 ln.beta.transpose();
  }
  return out;
}

template <class S>
Mat<S> attention(const AttentionParams<S>& p, const Mat<S>& h,
                 const std::vector<int>& attn_mask, int num_heads,
                 AttentionCache<S>& cache) {
  const Eigen::Index n = h.rows();
  const Eigen::Index d = h.cols();
  const Eigen::Index hd = d / num_heads;
  const S scale = S(1) / std::sqrt(static_cast<S>(hd));

  cache.q = h * p.wq;
  cache.q.rowwise() += p.bq.transpose();
  cache.k = h * p.wk;
  cache.k.rowwise() += p.bk.transpose();
  cache.v = h * p.wv;
  cache.v.rowwise() += p.bv.transpose();

  cache.probs.assign(static_cast<size_t>(num_heads), Mat<S>());
  cache.context.resize(n, d);
  for (int head = 0; head < num_heads; ++head) {
    const auto qh = cache.q.middleCols(head * hd, hd);
    const auto kh = cache.k.middleCols(head * hd, hd);
    const auto vh = cache.v.middleCols(head * hd, hd);
    Mat<S> scores = qh * kh.transpose() * scale;
    for (Eigen::Index j = 0; j < n; ++j)
      if (!attn_mask[static_cast<size_t>(j)])
        scores.col(j).array() += kMaskedScore<S>;
    softmax_rows_inplace(scores);
    cache.probs[static_cast<size_t>(head)] = scores;
    cache.context.middleCols(head * hd, hd) = scores * vh;
  }
  Mat<S> out = cache.context * p.wo;
  out.rowwise() += p.bo.transpose();
  return out;
}

template <class S>
Mat<S> ffn_rows(const FfnParams<S>& f, const Mat<S>& x, FfnCache<S>& cache) {
  cache.z = x * f.w1;
  cache.z.rowwise() += f.b1.transpose();
  cache.act = gelu(cache.z);
  Mat<S> out = cache.act * f.w2;
  out.rowwise() += f.b2.transpose();
  return out;
}

}  // namespace detail

/**
 * Full encoder pass over one framed sequence. Padding keys are excluded
 * from every attention softmax; all positions still produce a (finite)
 * output distribution.
 */
template <class S>
void forward_sequence(const ModelParams<S>& params, const std::vector<int>& ids,
                      const std::vector<int>& attn_mask,
                      SequenceCache<S>& cache) {
  const ModelConfig& cfg = params.config;
  const int n = static_cast<int>(ids.size());
  if (n > cfg.max_position)
    throw std::invalid_argument("sequence length " + std::to_string(n) +
                                " exceeds max_position " +
                                std::to_string(cfg.max_position));
  cache.ids = ids;
  cache.attn = attn_mask;

  cache.x0.resize(n, cfg.hidden_dim);
  for (int i = 0; i < n; ++i) {
    if (ids[static_cast<size_t>(i)] < 0 ||
        ids[static_cast<size_t>(i)] >= cfg.vocab_size)
      throw std::invalid_argument("token id out of range");
    cache.x0.row(i) = params.tok_emb.row(ids[static_cast<size_t>(i)]) +
                      params.pos_emb.row(i);
  }
  cache.e0 = detail::layer_norm(params.ln_emb, cache.x0, cache.ln_emb);

  cache.layers.assign(params.layers.size(), LayerCache<S>());
  Mat<S> h = cache.e0;
  for (size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    LayerCache<S>& lc = cache.layers[l];
    lc.input = h;
    lc.attn_out =
        detail::attention(layer.attn, h, attn_mask, cfg.num_heads, lc.attn);
    lc.resid1 = h + lc.attn_out;
    lc.h1 = detail::layer_norm(layer.ln1, lc.resid1, lc.ln1);

    if (layer.ffn) {
      lc.ffn.emplace();
      lc.ffn_out = detail::ffn_rows(*layer.ffn, lc.h1, *lc.ffn);
    } else {
      lc.moe.assign(static_cast<size_t>(n), MoeTokenCache<S>());
      lc.ffn_out.resize(n, cfg.hidden_dim);
      for (int i = 0; i < n; ++i) {
        const Vec<S> x = lc.h1.row(i).transpose();
        lc.ffn_out.row(i) =
            detail::moe_forward_cached(*layer.moe, x, lc.moe[static_cast<size_t>(i)])
                .transpose();
      }
    }
    lc.resid2 = lc.h1 + lc.ffn_out;
    lc.h2 = detail::layer_norm(layer.ln2, lc.resid2, lc.ln2);
    h = lc.h2;
  }

  cache.logits = h * params.tok_emb.transpose();
  cache.logits.rowwise() += params.mlm_bias.transpose();
  cache.logprobs = log_softmax_rows(cache.logits);
}

template <class S>
struct ForwardResult {
  std::vector<Mat<S>> logprobs;  // per batch row: width x vocab
};

template <class S>
ForwardResult<S> forward(const ModelParams<S>& params, const MaskedBatch& batch) {
  if (batch.width() > params.config.max_position)
    throw std::invalid_argument("batch width exceeds max_position");
  ForwardResult<S> result;
  result.logprobs.reserve(static_cast<size_t>(batch.batch_size()));
  for (int b = 0; b < batch.batch_size(); ++b) {
    std::vector<int> ids(static_cast<size_t>(batch.width()));
    std::vector<int> attn(static_cast<size_t>(batch.width()));
    for (int i = 0; i < batch.width(); ++i) {
      ids[static_cast<size_t>(i)] = batch.input_ids(b, i);
      attn[static_cast<size_t>(i)] = batch.attention_mask(b, i);
    }
    SequenceCache<S> cache;
    forward_sequence(params, ids, attn, cache);
    result.logprobs.push_back(std::move(cache.logprobs));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

template <class S>
struct LossResult {
  S sum = S(0);   // negative log-likelihood summed over all masked positions
  S mean = S(0);  // per-masked-position mean; what the trainer minimizes
  int masked_count = 0;
  bool no_masked_positions = false;
};

/**
 * Cross-entropy over the letter-indexed mask sets: the sum of
 * -log P(gold | position) across every masked position, plus the
 * per-position mean. A batch with zero masked positions yields zero loss
 * with `no_masked_positions` flagged.
 */
template <class S>
LossResult<S> mlm_loss(const ForwardResult<S>& fwd, const MaskedBatch& batch) {
  if (static_cast<int>(fwd.logprobs.size()) != batch.batch_size())
    throw std::invalid_argument("mlm_loss: batch size mismatch");
  LossResult<S> loss;
  for (int b = 0; b < batch.batch_size(); ++b) {
    const Mat<S>& lp = fwd.logprobs[static_cast<size_t>(b)];
    if (lp.rows() != batch.width())
      throw std::invalid_argument("mlm_loss: width mismatch");
    for (int i = 0; i < batch.width(); ++i) {
      const int gold = batch.target_ids(b, i);
      if (gold == kIgnoreTarget) continue;
      if (gold < 0 || gold >= lp.cols())
        throw std::invalid_argument("mlm_loss: gold id out of range");
      loss.sum -= lp(i, gold);
      ++loss.masked_count;
    }
  }
  if (loss.masked_count == 0) {
    loss.no_masked_positions = true;
  } else {
    loss.mean = loss.sum / static_cast<S>(loss.masked_count);
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Dense -> MoE conversion
// ---------------------------------------------------------------------------

/**
 * Replaces the dense FFN of every planned layer with an MoE block whose
 * shared expert is an exact copy of that FFN. Routed experts and router are
 * freshly initialized; the combine logits start at [0, -10] so the routed
 * path is effectively silent (beta ~ 4.5e-5) and the converted model's
 * outputs match the dense model at conversion time.
 */
template <class S>
ModelParams<S> densify_to_moe(const ModelParams<S>& dense,
                              const std::map<int, MoeSpec>& moe_plan,
                              std::uint64_t seed, double init_stddev = 0.02) {
  for (const auto& [idx, spec] : moe_plan) {
    if (idx < 0 || idx >= dense.config.num_layers)
      throw std::invalid_argument("densify_to_moe: layer index " +
                                  std::to_string(idx) + " out of range");
    if (spec.num_experts < 2 || spec.top_k < 1 || spec.top_k > spec.num_experts)
      throw std::invalid_argument("densify_to_moe: bad MoE spec for layer " +
                                  std::to_string(idx));
  }

  ModelParams<S> out = dense;
  std::mt19937_64 rng(seed);
  for (const auto& [idx, spec] : moe_plan) {
    auto& layer = out.layers[static_cast<size_t>(idx)];
    if (!layer.ffn)
      throw std::invalid_argument("densify_to_moe: layer " +
                                  std::to_string(idx) + " has no dense FFN");
    MoeLayerParams<S> moe;
    moe.top_k = spec.top_k;
    moe.router_w.resize(dense.config.hidden_dim, spec.num_experts);
    detail::fill_normal(moe.router_w, rng, init_stddev);
    moe.router_b = Vec<S>::Zero(spec.num_experts);
    for (int e = 0; e < spec.num_experts; ++e)
      moe.experts.push_back(detail::init_ffn<S>(dense.config.hidden_dim,
                                                dense.config.ffn_dim, rng,
                                                init_stddev));
    moe.shared_expert = *layer.ffn;  // exact copy
    moe.combine = Vec<S>(2);
    moe.combine << S(0), S(-10);
    layer.moe = std::move(moe);
    layer.ffn.reset();
    out.config.moe_plan[idx] = spec;
  }
  return out;
}

}  // namespace pyab
