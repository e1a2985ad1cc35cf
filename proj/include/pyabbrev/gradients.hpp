// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>

#include "pyabbrev/model.hpp"

namespace pyab {

namespace detail {

// Backward of y = gamma .* xhat + beta over all rows. Returns dx and
// accumulates parameter gradients.
template <class S>
Mat<S> layer_norm_backward(const Mat<S>& dy, const LayerNormCache<S>& cache,
                           const LayerNormParams<S>& ln,
                           LayerNormParams<S>& grad) {
  const Eigen::Index n = dy.rows(), d = dy.cols();
  Mat<S> dx(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    grad.gamma += dy.row(i).cwiseProduct(cache.xhat.row(i)).transpose();
    grad.beta += dy.row(i).transpose();
    const auto dxhat = dy.row(i).cwiseProduct(ln.gamma.transpose());
    const S mean_dxhat = dxhat.mean();
    const S mean_dxhat_xhat = dxhat.cwiseProduct(cache.xhat.row(i)).mean();
    dx.row(i) = (dxhat.array() - mean_dxhat -
                 cache.xhat.row(i).array() * mean_dxhat_xhat) *
                cache.inv_std[i];
  }
  return dx;
}

template <class S>
Mat<S> ffn_rows_backward(const Mat<S>& dout, const Mat<S>& input,
                         const FfnCache<S>& cache, const FfnParams<S>& f,
                         FfnParams<S>& grad) {
  grad.w2 += cache.act.transpose() * dout;
  grad.b2 += dout.colwise().sum().transpose();
  Mat<S> dact = dout * f.w2.transpose();
  Mat<S> dz = dact.cwiseProduct(gelu_grad(cache.z));
  grad.w1 += input.transpose() * dz;
  grad.b1 += dz.colwise().sum().transpose();
  return dz * f.w1.transpose();
}

// Single-token FFN backward (column-vector convention used by MoE experts).
template <class S>
Vec<S> ffn_vec_backward(const Vec<S>& dout, const Vec<S>& input,
                        const Vec<S>& z, const Vec<S>& act,
                        const FfnParams<S>& f, FfnParams<S>& grad) {
  grad.w2 += act * dout.transpose();
  grad.b2 += dout;
  Vec<S> dact = f.w2 * dout;
  Vec<S> dz = dact.cwiseProduct(z.unaryExpr([](S v) { return gelu_grad(v); }));
  grad.w1 += input * dz.transpose();
  grad.b1 += dz;
  return f.w1 * dz;
}

template <class S>
Vec<S> moe_token_backward(const Vec<S>& dy, const MoeTokenCache<S>& cache,
                          const MoeLayerParams<S>& layer,
                          MoeLayerParams<S>& grad) {
  // Combine logits: (alpha, beta) = softmax([a, b]).
  Vec<S> ab(2), dab(2);
  ab << cache.alpha, cache.beta;
  dab << dy.dot(cache.shared_out), dy.dot(cache.routed);
  grad.combine += softmax_backward<S>(ab, dab);

  Vec<S> dx = ffn_vec_backward<S>(Vec<S>(cache.alpha * dy), cache.input,
                                  cache.shared_z, cache.shared_act,
                                  layer.shared_expert, grad.shared_expert);

  // Routed path: only the selected experts see gradient; the router couples
  // every logit through the softmax.
  Vec<S> dweights = Vec<S>::Zero(cache.weights.size());
  for (size_t j = 0; j < cache.top.size(); ++j) {
    const int e = cache.top[j];
    const S w = cache.weights[e];
    dx += ffn_vec_backward<S>(Vec<S>(cache.beta * w * dy), cache.input,
                              cache.expert_z[j], cache.expert_act[j],
                              layer.experts[static_cast<size_t>(e)],
                              grad.experts[static_cast<size_t>(e)]);
    dweights[e] = cache.beta * dy.dot(cache.expert_out[j]);
  }
  const Vec<S> dlogits = softmax_backward<S>(cache.weights, dweights);
  grad.router_w += cache.input * dlogits.transpose();
  grad.router_b += dlogits;
  dx += layer.router_w * dlogits;
  return dx;
}

template <class S>
Mat<S> attention_backward(const Mat<S>& dout, const LayerCache<S>& lc,
                          const AttentionParams<S>& p, int num_heads,
                          AttentionParams<S>& grad) {
  const Eigen::Index n = dout.rows(), d = dout.cols();
  const Eigen::Index hd = d / num_heads;
  const S scale = S(1) / std::sqrt(static_cast<S>(hd));
  const AttentionCache<S>& ac = lc.attn;

  grad.wo += ac.context.transpose() * dout;
  grad.bo += dout.colwise().sum().transpose();
  Mat<S> dcontext = dout * p.wo.transpose();

  Mat<S> dq(n, d), dk(n, d), dv(n, d);
  for (int head = 0; head < num_heads; ++head) {
    const auto qh = ac.q.middleCols(head * hd, hd);
    const auto kh = ac.k.middleCols(head * hd, hd);
    const auto vh = ac.v.middleCols(head * hd, hd);
    const Mat<S>& probs = ac.probs[static_cast<size_t>(head)];
    const auto dch = dcontext.middleCols(head * hd, hd);

    Mat<S> dprobs = dch * vh.transpose();
    dv.middleCols(head * hd, hd) = probs.transpose() * dch;
    Mat<S> dscores(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      dscores.row(i) =
          softmax_backward<S>(probs.row(i).transpose(), dprobs.row(i).transpose())
              .transpose();
    dq.middleCols(head * hd, hd) = dscores * kh * scale;
    dk.middleCols(head * hd, hd) = dscores.transpose() * qh * scale;
  }

  const Mat<S>& h = lc.input;
  grad.wq += h.transpose() * dq;
  grad.bq += dq.colwise().sum().transpose();
  grad.wk += h.transpose() * dk;
  grad.bk += dk.colwise().sum().transpose();
  grad.wv += h.transpose() * dv;
  grad.bv += dv.colwise().sum().transpose();
  return dq * p.wq.transpose() + dk * p.wk.transpose() + dv * p.wv.transpose();
}

// Backward through one cached sequence given d(logits).
template <class S>
void sequence_backward(const ModelParams<S>& params, const SequenceCache<S>& sc,
                       const Mat<S>& dlogits, ModelParams<S>& grad) {
  const int n = static_cast<int>(sc.ids.size());

  // Tied output projection: logits = H * tok_emb^T + mlm_bias.
  const Mat<S>& h_final =
      sc.layers.empty() ? sc.e0 : sc.layers.back().h2;
  grad.tok_emb += dlogits.transpose() * h_final;
  grad.mlm_bias += dlogits.colwise().sum().transpose();
  Mat<S> dh = dlogits * params.tok_emb;

  for (int l = static_cast<int>(params.layers.size()) - 1; l >= 0; --l) {
    const auto& layer = params.layers[static_cast<size_t>(l)];
    auto& lgrad = grad.layers[static_cast<size_t>(l)];
    const LayerCache<S>& lc = sc.layers[static_cast<size_t>(l)];

    Mat<S> dresid2 =
        layer_norm_backward(dh, lc.ln2, layer.ln2, lgrad.ln2);
    Mat<S> dh1 = dresid2;  // residual branch
    if (layer.ffn) {
      dh1 += ffn_rows_backward(dresid2, lc.h1, *lc.ffn, *layer.ffn, *lgrad.ffn);
    } else {
      for (int i = 0; i < n; ++i) {
        const Vec<S> dy = dresid2.row(i).transpose();
        dh1.row(i) += moe_token_backward<S>(dy, lc.moe[static_cast<size_t>(i)],
                                            *layer.moe, *lgrad.moe)
                          .transpose();
      }
    }

    Mat<S> dresid1 = layer_norm_backward(dh1, lc.ln1, layer.ln1, lgrad.ln1);
    dh = dresid1;  // residual branch
    dh += attention_backward(dresid1, lc, layer.attn, params.config.num_heads,
                             lgrad.attn);
  }

  Mat<S> dx0 = layer_norm_backward(dh, sc.ln_emb, params.ln_emb, grad.ln_emb);
  for (int i = 0; i < n; ++i) {
    grad.tok_emb.row(sc.ids[static_cast<size_t>(i)]) += dx0.row(i);
    grad.pos_emb.row(i) += dx0.row(i);
  }
}

}  // namespace detail

template <class S>
struct GradientResult {
  ModelParams<S> grads;
  LossResult<S> loss;
};

/**
 * Gradient of loss_scale x (per-masked-position mean of the MLM loss) with
 * respect to every trainable tensor. Experts never selected by the router
 * receive zero gradient through the routed path. Throws NumericError if
 * the loss is non-finite.
 */
template <class S>
GradientResult<S> compute_gradients(const ModelParams<S>& params,
                                    const MaskedBatch& batch,
                                    S loss_scale = S(1)) {
  GradientResult<S> result{zeros_like(params), {}};

  std::vector<SequenceCache<S>> caches(static_cast<size_t>(batch.batch_size()));
  ForwardResult<S> fwd;
  for (int b = 0; b < batch.batch_size(); ++b) {
    std::vector<int> ids(static_cast<size_t>(batch.width()));
    std::vector<int> attn(static_cast<size_t>(batch.width()));
    for (int i = 0; i < batch.width(); ++i) {
      ids[static_cast<size_t>(i)] = batch.input_ids(b, i);
      attn[static_cast<size_t>(i)] = batch.attention_mask(b, i);
    }
    forward_sequence(params, ids, attn, caches[static_cast<size_t>(b)]);
    fwd.logprobs.push_back(caches[static_cast<size_t>(b)].logprobs);
  }
  result.loss = mlm_loss(fwd, batch);
  if (result.loss.no_masked_positions) return result;
  if (!std::isfinite(static_cast<double>(result.loss.sum)))
    throw NumericError("compute_gradients: non-finite loss");

  const S scale = loss_scale / static_cast<S>(result.loss.masked_count);
  for (int b = 0; b < batch.batch_size(); ++b) {
    const SequenceCache<S>& sc = caches[static_cast<size_t>(b)];
    Mat<S> dlogits = Mat<S>::Zero(batch.width(), params.config.vocab_size);
    bool any = false;
    for (int i = 0; i < batch.width(); ++i) {
      const int gold = batch.target_ids(b, i);
      if (gold == kIgnoreTarget) continue;
      dlogits.row(i) = sc.logprobs.row(i).array().exp() * scale;
      dlogits(i, gold) -= scale;
      any = true;
    }
    if (any) detail::sequence_backward(params, sc, dlogits, result.grads);
  }
  return result;
}

}  // namespace pyab
