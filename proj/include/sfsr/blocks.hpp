/*
 * Copyright (c) 2026, The sfsr Authors.  All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Network blocks: window attention, ConvMLP, STLc, DCA, SCA and iRSTB.
//
// Each block comes as a parameter struct, a forward function that optionally
// records a cache, and a backward function that accumulates parameter
// gradients into a struct of the same type and returns the input gradient.

#pragma once

#include "sfsr/ops.hpp"
#include "sfsr/tensor.hpp"
#include "sfsr/windowing.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sfsr {

template <typename Scalar>
struct LinearParams {
  Tensor<Scalar> weight;  // [out, in]
  Tensor<Scalar> bias;    // [out]

  static LinearParams zeros(Index out, Index in) { return {Tensor<Scalar>({out, in}), Tensor<Scalar>({out})}; }

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".weight", weight);
    f(prefix + ".bias", bias);
  }
};

template <typename Scalar>
struct ConvParams {
  ConvSpec spec;
  Tensor<Scalar> weight;  // [out, in/groups, kh, kw]
  Tensor<Scalar> bias;    // [out]

  static ConvParams zeros(Index out, Index in, const ConvSpec& spec) {
    return {spec, Tensor<Scalar>({out, in / spec.groups, spec.kernel_h, spec.kernel_w}), Tensor<Scalar>({out})};
  }

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".weight", weight);
    f(prefix + ".bias", bias);
  }
};

template <typename Scalar>
struct NormParams {
  Tensor<Scalar> gamma;
  Tensor<Scalar> beta;

  static NormParams identity(Index c) { return {Tensor<Scalar>({c}, Scalar(1)), Tensor<Scalar>({c})}; }

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".gamma", gamma);
    f(prefix + ".beta", beta);
  }
};

template <typename Scalar, typename Params>
Params zeros_like_params(const Params& p) {
  Params g = p;
  g.visit("", [](const std::string&, Tensor<Scalar>& t) { t.array().setZero(); });
  return g;
}

// ---------------------------------------------------------------------------
// Windowed multi-head self-attention

template <typename Scalar>
struct AttentionParams {
  Index heads = 1;
  Index window = 1;
  LinearParams<Scalar> qkv;       // [3C, C]
  LinearParams<Scalar> proj;      // [C, C]
  Tensor<Scalar> relative_bias;   // [(2w-1)^2, heads]

  static AttentionParams zeros(Index channels, Index heads, Index window) {
    return {heads, window, LinearParams<Scalar>::zeros(3 * channels, channels),
            LinearParams<Scalar>::zeros(channels, channels),
            Tensor<Scalar>({relative_bias_table_size(window), heads})};
  }

  Index channels() const { return proj.weight.dim(0); }

  void validate() const {
    if (heads <= 0 || channels() % heads != 0) throw ValueError("attention heads must divide channels");
    if (relative_bias.shape() != Shape{relative_bias_table_size(window), heads}) {
      throw ShapeError("relative position bias table does not match window/heads");
    }
  }

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    qkv.visit(prefix + ".qkv", f);
    proj.visit(prefix + ".proj", f);
    f(prefix + ".relative_bias", relative_bias);
  }
};

template <typename Scalar>
struct AttentionCache {
  Tensor<Scalar> x;
  Tensor<Scalar> qkv;
  Tensor<Scalar> context;
  std::vector<Matrix<Scalar>> probs;  // [(n * windows + k) * heads + h]
};

namespace detail {

template <typename Scalar>
std::vector<Matrix<Scalar>> head_bias(const AttentionParams<Scalar>& p) {
  const auto rpi = relative_position_index(p.window);
  std::vector<Matrix<Scalar>> bias(static_cast<std::size_t>(p.heads), Matrix<Scalar>(rpi.rows(), rpi.cols()));
  for (Index h = 0; h < p.heads; ++h)
    for (Index i = 0; i < rpi.rows(); ++i)
      for (Index j = 0; j < rpi.cols(); ++j) bias[h](i, j) = p.relative_bias(Index{rpi(i, j)}, h);
  return bias;
}

template <typename Scalar>
void gather(const ConstRowMatrixMap<Scalar>& src, Index row0, const Eigen::MatrixXi& idx, Index k, Index col,
            Index width, Matrix<Scalar>& dst) {
  dst.resize(idx.cols(), width);
  for (Index p = 0; p < idx.cols(); ++p) dst.row(p) = src.block(row0 + idx(k, p), col, 1, width);
}

template <typename Scalar>
void scatter(const Matrix<Scalar>& src, RowMatrixMap<Scalar>& dst, Index row0, const Eigen::MatrixXi& idx, Index k,
             Index col) {
  for (Index p = 0; p < idx.cols(); ++p) dst.block(row0 + idx(k, p), col, 1, src.cols()) += src.row(p);
}

}  // namespace detail

/// (Shifted-)window multi-head self-attention over tokens [N, H*W, C].
///
/// Equivalent to unembed -> cyclic_shift -> window_partition -> per-window
/// attention with relative-position bias and region mask -> window_reverse ->
/// inverse shift, implemented as a gather/scatter over token indices.
template <typename Scalar>
Tensor<Scalar> sw_msa(const Tensor<Scalar>& x, const AttentionParams<Scalar>& p, const WindowLayout& layout,
                      AttentionCache<Scalar>* cache = nullptr) {
  layout.validate();
  p.validate();
  if (x.rank() != 3 || x.dim(1) != layout.height * layout.width || x.dim(2) != p.channels()) {
    throw ShapeError("sw_msa: tokens " + shape_string(x.shape()) + " do not match layout/params");
  }
  if (layout.window != p.window) throw ShapeError("sw_msa: layout window differs from bias table window");
  const Index n = x.dim(0), len = x.dim(1), c = x.dim(2), d = c / p.heads;
  const Index windows = layout.num_windows(), n2 = layout.tokens_per_window();
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(d));

  Tensor<Scalar> qkv = conv1d_tokens(x, p.qkv.weight, p.qkv.bias);
  const auto idx = window_token_indices(layout);
  const auto bias = detail::head_bias(p);
  const Tensor<Scalar> mask = layout.shift > 0 ? attention_mask<Scalar>(layout) : Tensor<Scalar>();

  Tensor<Scalar> context({n, len, c});
  const auto qkv_m = std::as_const(qkv).matrix(n * len, 3 * c);
  auto ctx_m = context.matrix(n * len, c);
  if (cache) cache->probs.assign(static_cast<std::size_t>(n * windows * p.heads), Matrix<Scalar>());

  Matrix<Scalar> q, k, v, logits, out;
  for (Index b = 0; b < n; ++b) {
    for (Index win = 0; win < windows; ++win) {
      for (Index h = 0; h < p.heads; ++h) {
        detail::gather(qkv_m, b * len, idx, win, h * d, d, q);
        detail::gather(qkv_m, b * len, idx, win, c + h * d, d, k);
        detail::gather(qkv_m, b * len, idx, win, 2 * c + h * d, d, v);
        logits.noalias() = scale * q * k.transpose();
        logits += bias[h];
        if (layout.shift > 0) logits += ConstRowMatrixMap<Scalar>(mask.data() + win * n2 * n2, n2, n2);
        // Row-wise softmax.
        for (Index i = 0; i < n2; ++i) {
          const Scalar m = logits.row(i).maxCoeff();
          logits.row(i) = (logits.row(i).array() - m).exp().matrix();
          logits.row(i) /= logits.row(i).sum();
        }
        out.noalias() = logits * v;
        detail::scatter(out, ctx_m, b * len, idx, win, h * d);
        if (cache) cache->probs[(b * windows + win) * p.heads + h] = logits;
      }
    }
  }
  Tensor<Scalar> y = conv1d_tokens(context, p.proj.weight, p.proj.bias);
  if (cache) {
    cache->x = x;
    cache->qkv = std::move(qkv);
    cache->context = std::move(context);
  }
  return y;
}

template <typename Scalar>
Tensor<Scalar> sw_msa_backward(const AttentionParams<Scalar>& p, const WindowLayout& layout,
                               const AttentionCache<Scalar>& cache, const Tensor<Scalar>& dy,
                               AttentionParams<Scalar>& grads) {
  const Index n = cache.x.dim(0), len = cache.x.dim(1), c = cache.x.dim(2), d = c / p.heads;
  const Index windows = layout.num_windows(), n2 = layout.tokens_per_window();
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(d));

  auto proj_g = conv1d_tokens_backward(cache.context, p.proj.weight, dy);
  grads.proj.weight += proj_g.dweight;
  grads.proj.bias += proj_g.dbias;

  const auto idx = window_token_indices(layout);
  const auto rpi = relative_position_index(p.window);
  Tensor<Scalar> dqkv({n, len, 3 * c});
  const auto qkv_m = cache.qkv.matrix(n * len, 3 * c);
  const auto dctx_m = std::as_const(proj_g.dx).matrix(n * len, c);
  auto dqkv_m = dqkv.matrix(n * len, 3 * c);

  Matrix<Scalar> q, k, v, dout, dprob, dlogits, tmp;
  for (Index b = 0; b < n; ++b) {
    for (Index win = 0; win < windows; ++win) {
      for (Index h = 0; h < p.heads; ++h) {
        const Matrix<Scalar>& prob = cache.probs[(b * windows + win) * p.heads + h];
        detail::gather(qkv_m, b * len, idx, win, h * d, d, q);
        detail::gather(qkv_m, b * len, idx, win, c + h * d, d, k);
        detail::gather(qkv_m, b * len, idx, win, 2 * c + h * d, d, v);
        detail::gather(dctx_m, b * len, idx, win, h * d, d, dout);
        dprob.noalias() = dout * v.transpose();
        tmp.noalias() = prob.transpose() * dout;  // dV
        detail::scatter(tmp, dqkv_m, b * len, idx, win, 2 * c + h * d);
        const auto row_dot = (dprob.array() * prob.array()).rowwise().sum().eval();
        dlogits = (prob.array() * (dprob.array().colwise() - row_dot)).matrix();
        for (Index i = 0; i < n2; ++i)
          for (Index j = 0; j < n2; ++j) grads.relative_bias(Index{rpi(i, j)}, h) += dlogits(i, j);
        tmp.noalias() = scale * dlogits * k;  // dQ
        detail::scatter(tmp, dqkv_m, b * len, idx, win, h * d);
        tmp.noalias() = scale * dlogits.transpose() * q;  // dK
        detail::scatter(tmp, dqkv_m, b * len, idx, win, c + h * d);
      }
    }
  }
  auto qkv_g = conv1d_tokens_backward(cache.x, p.qkv.weight, dqkv);
  grads.qkv.weight += qkv_g.dweight;
  grads.qkv.bias += qkv_g.dbias;
  return std::move(qkv_g.dx);
}

// ---------------------------------------------------------------------------
// ConvMLP: kernel-1 conv -> GELU -> kernel-1 conv, shared over positions.

template <typename Scalar>
struct ConvMlpParams {
  LinearParams<Scalar> fc1;  // [hidden, C]
  LinearParams<Scalar> fc2;  // [C, hidden]

  static ConvMlpParams zeros(Index channels, Index hidden) {
    return {LinearParams<Scalar>::zeros(hidden, channels), LinearParams<Scalar>::zeros(channels, hidden)};
  }

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    fc1.visit(prefix + ".fc1", f);
    fc2.visit(prefix + ".fc2", f);
  }
};

template <typename Scalar>
struct ConvMlpCache {
  Tensor<Scalar> x;
  Tensor<Scalar> pre;
  Tensor<Scalar> act;
};

template <typename Scalar>
Tensor<Scalar> conv_mlp(const Tensor<Scalar>& x, const ConvMlpParams<Scalar>& p,
                        ConvMlpCache<Scalar>* cache = nullptr) {
  Tensor<Scalar> pre = conv1d_tokens(x, p.fc1.weight, p.fc1.bias);
  Tensor<Scalar> act = gelu(pre);
  Tensor<Scalar> y = conv1d_tokens(act, p.fc2.weight, p.fc2.bias);
  if (cache) *cache = {x, std::move(pre), std::move(act)};
  return y;
}

template <typename Scalar>
Tensor<Scalar> conv_mlp_backward(const ConvMlpParams<Scalar>& p, const ConvMlpCache<Scalar>& cache,
                                 const Tensor<Scalar>& dy, ConvMlpParams<Scalar>& grads) {
  auto g2 = conv1d_tokens_backward(cache.act, p.fc2.weight, dy);
  grads.fc2.weight += g2.dweight;
  grads.fc2.bias += g2.dbias;
  auto g1 = conv1d_tokens_backward(cache.x, p.fc1.weight, gelu_backward(cache.pre, g2.dx));
  grads.fc1.weight += g1.dweight;
  grads.fc1.bias += g1.dbias;
  return std::move(g1.dx);
}

// ---------------------------------------------------------------------------
// STLc: x1 = attn(norm1(x)) + x; x2 = mlp(norm2(x1)) + x1.

template <typename Scalar>
struct StlcParams {
  NormParams<Scalar> norm1;
  AttentionParams<Scalar> attn;
  NormParams<Scalar> norm2;
  ConvMlpParams<Scalar> mlp;

  static StlcParams init(Index channels, Index heads, Index window, Index hidden) {
    return {NormParams<Scalar>::identity(channels), AttentionParams<Scalar>::zeros(channels, heads, window),
            NormParams<Scalar>::identity(channels), ConvMlpParams<Scalar>::zeros(channels, hidden)};
  }

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    norm1.visit(prefix + ".norm1", f);
    attn.visit(prefix + ".attn", f);
    norm2.visit(prefix + ".norm2", f);
    mlp.visit(prefix + ".mlp", f);
  }
};

template <typename Scalar>
struct StlcCache {
  Tensor<Scalar> x;
  AttentionCache<Scalar> attn;
  Tensor<Scalar> x1;
  ConvMlpCache<Scalar> mlp;
};

template <typename Scalar>
Tensor<Scalar> stlc(const Tensor<Scalar>& x, const StlcParams<Scalar>& p, const WindowLayout& layout,
                    StlcCache<Scalar>* cache = nullptr) {
  Tensor<Scalar> x1 = sw_msa(layer_norm(x, p.norm1.gamma, p.norm1.beta), p.attn, layout,
                             cache ? &cache->attn : nullptr);
  x1 += x;
  Tensor<Scalar> x2 = conv_mlp(layer_norm(x1, p.norm2.gamma, p.norm2.beta), p.mlp, cache ? &cache->mlp : nullptr);
  x2 += x1;
  if (cache) {
    cache->x = x;
    cache->x1 = std::move(x1);
  }
  return x2;
}

template <typename Scalar>
Tensor<Scalar> stlc_backward(const StlcParams<Scalar>& p, const WindowLayout& layout, const StlcCache<Scalar>& cache,
                             const Tensor<Scalar>& dy, StlcParams<Scalar>& grads) {
  auto n2 = layer_norm_backward(cache.x1, p.norm2.gamma, conv_mlp_backward(p.mlp, cache.mlp, dy, grads.mlp));
  grads.norm2.gamma += n2.dgamma;
  grads.norm2.beta += n2.dbeta;
  Tensor<Scalar> dx1 = dy + n2.dx;
  auto n1 = layer_norm_backward(cache.x, p.norm1.gamma, sw_msa_backward(p.attn, layout, cache.attn, dx1, grads.attn));
  grads.norm1.gamma += n1.dgamma;
  grads.norm1.beta += n1.dbeta;
  return dx1 + n1.dx;
}

// ---------------------------------------------------------------------------
// DCA: gate = sigmoid(pw(relu(dw(avgpool(x))))), output x * gate.

template <typename Scalar>
struct DcaParams {
  ConvParams<Scalar> depthwise;  // 1x1, groups = C
  ConvParams<Scalar> pointwise;  // 1x1, C -> C

  static DcaParams zeros(Index channels) {
    return {ConvParams<Scalar>::zeros(channels, channels, ConvSpec::depthwise(channels)),
            ConvParams<Scalar>::zeros(channels, channels, ConvSpec::pointwise())};
  }

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    depthwise.visit(prefix + ".depthwise", f);
    pointwise.visit(prefix + ".pointwise", f);
  }
};

template <typename Scalar>
struct DcaCache {
  Tensor<Scalar> x;
  Tensor<Scalar> pooled;
  Tensor<Scalar> pre;
  Tensor<Scalar> act;
  Tensor<Scalar> gate;
};

/// Per-channel gate of shape [N, C, 1, 1].
template <typename Scalar>
Tensor<Scalar> dca_gate(const Tensor<Scalar>& x, const DcaParams<Scalar>& p, DcaCache<Scalar>* cache = nullptr) {
  Tensor<Scalar> pooled = adaptive_avg_pool_to_1x1(x);
  Tensor<Scalar> pre = conv2d(pooled, p.depthwise.weight, p.depthwise.bias, p.depthwise.spec);
  Tensor<Scalar> act = relu(pre);
  Tensor<Scalar> gate = sigmoid(conv2d(act, p.pointwise.weight, p.pointwise.bias, p.pointwise.spec));
  if (cache) *cache = {x, std::move(pooled), std::move(pre), std::move(act), gate};
  return gate;
}

template <typename Scalar>
Tensor<Scalar> dca(const Tensor<Scalar>& x, const DcaParams<Scalar>& p, DcaCache<Scalar>* cache = nullptr) {
  const Tensor<Scalar> gate = dca_gate(x, p, cache);
  const Index planes = x.dim(0) * x.dim(1), hw = x.dim(2) * x.dim(3);
  Tensor<Scalar> y(x.shape());
  y.matrix(planes, hw) = x.matrix(planes, hw).array().colwise() * gate.array();
  return y;
}

template <typename Scalar>
Tensor<Scalar> dca_backward(const DcaParams<Scalar>& p, const DcaCache<Scalar>& cache, const Tensor<Scalar>& dy,
                            DcaParams<Scalar>& grads) {
  const Tensor<Scalar>& x = cache.x;
  const Index planes = x.dim(0) * x.dim(1), hw = x.dim(2) * x.dim(3);
  Tensor<Scalar> dx(x.shape());
  dx.matrix(planes, hw) = dy.matrix(planes, hw).array().colwise() * cache.gate.array();
  Tensor<Scalar> dgate(cache.gate.shape());
  dgate.array() = (dy.matrix(planes, hw).array() * x.matrix(planes, hw).array()).rowwise().sum();

  auto pw = conv2d_backward(cache.act, p.pointwise.weight, p.pointwise.spec, sigmoid_backward(cache.gate, dgate));
  grads.pointwise.weight += pw.dweight;
  grads.pointwise.bias += pw.dbias;
  auto dw = conv2d_backward(cache.pooled, p.depthwise.weight, p.depthwise.spec, relu_backward(cache.pre, pw.dx));
  grads.depthwise.weight += dw.dweight;
  grads.depthwise.bias += dw.dbias;
  dx += adaptive_avg_pool_to_1x1_backward(dw.dx, x.dim(2), x.dim(3));
  return dx;
}

// ---------------------------------------------------------------------------
// SCA: conv1x1(x) + dilated conv3x3 (d=2)(x) + depthwise conv1x1(x).

template <typename Scalar>
struct ScaParams {
  ConvParams<Scalar> pointwise;
  ConvParams<Scalar> dilated;
  ConvParams<Scalar> depthwise;

  static ScaParams zeros(Index channels) {
    return {ConvParams<Scalar>::zeros(channels, channels, ConvSpec::pointwise()),
            ConvParams<Scalar>::zeros(channels, channels, ConvSpec::same(3, 2)),
            ConvParams<Scalar>::zeros(channels, channels, ConvSpec::depthwise(channels))};
  }

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    pointwise.visit(prefix + ".pointwise", f);
    dilated.visit(prefix + ".dilated", f);
    depthwise.visit(prefix + ".depthwise", f);
  }
};

template <typename Scalar>
Tensor<Scalar> sca(const Tensor<Scalar>& x, const ScaParams<Scalar>& p) {
  Tensor<Scalar> y = conv2d(x, p.pointwise.weight, p.pointwise.bias, p.pointwise.spec);
  y += conv2d(x, p.dilated.weight, p.dilated.bias, p.dilated.spec);
  y += conv2d(x, p.depthwise.weight, p.depthwise.bias, p.depthwise.spec);
  return y;
}

template <typename Scalar>
Tensor<Scalar> sca_backward(const ScaParams<Scalar>& p, const Tensor<Scalar>& x, const Tensor<Scalar>& dy,
                            ScaParams<Scalar>& grads) {
  Tensor<Scalar> dx = Tensor<Scalar>::zeros_like(x);
  const auto branch = [&](const ConvParams<Scalar>& cp, ConvParams<Scalar>& cg) {
    auto g = conv2d_backward(x, cp.weight, cp.spec, dy);
    cg.weight += g.dweight;
    cg.bias += g.dbias;
    dx += g.dx;
  };
  branch(p.pointwise, grads.pointwise);
  branch(p.dilated, grads.dilated);
  branch(p.depthwise, grads.depthwise);
  return dx;
}

// ---------------------------------------------------------------------------
// iRSTB: STLc chain + SCA branch (on the unembedded grid) + identity.

/// Shift used by layer `i` of an STLc chain: 0, w/2, 0, w/2, ...
inline Index stlc_shift(Index layer, Index window) { return layer % 2 == 0 ? 0 : window / 2; }

template <typename Scalar>
struct IrstbParams {
  std::vector<StlcParams<Scalar>> layers;
  std::optional<ScaParams<Scalar>> sca;

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    for (std::size_t i = 0; i < layers.size(); ++i) layers[i].visit(prefix + ".stlc." + std::to_string(i), f);
    if (sca) sca->visit(prefix + ".sca", f);
  }
};

template <typename Scalar>
struct IrstbCache {
  std::vector<StlcCache<Scalar>> layers;
  Tensor<Scalar> grid;  // unembedded input seen by SCA
};

template <typename Scalar>
Tensor<Scalar> irstb(const Tensor<Scalar>& tokens, Index h, Index w, const IrstbParams<Scalar>& p,
                     IrstbCache<Scalar>* cache = nullptr) {
  if (p.layers.empty()) throw ValueError("iRSTB needs at least one STLc layer");
  const Index window = p.layers.front().attn.window;
  if (cache) cache->layers.assign(p.layers.size(), StlcCache<Scalar>());
  Tensor<Scalar> chain = tokens;
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    const WindowLayout layout{h, w, window, stlc_shift(static_cast<Index>(i), window)};
    chain = stlc(chain, p.layers[i], layout, cache ? &cache->layers[i] : nullptr);
  }
  chain += tokens;
  if (p.sca) {
    Tensor<Scalar> grid = patch_unembed(tokens, h, w);
    chain += patch_embed(sca(grid, *p.sca));
    if (cache) cache->grid = std::move(grid);
  }
  return chain;
}

template <typename Scalar>
Tensor<Scalar> irstb_backward(const IrstbParams<Scalar>& p, Index h, Index w, const IrstbCache<Scalar>& cache,
                              const Tensor<Scalar>& dy, IrstbParams<Scalar>& grads) {
  const Index window = p.layers.front().attn.window;
  Tensor<Scalar> dchain = dy;
  for (std::size_t i = p.layers.size(); i-- > 0;) {
    const WindowLayout layout{h, w, window, stlc_shift(static_cast<Index>(i), window)};
    dchain = stlc_backward(p.layers[i], layout, cache.layers[i], dchain, grads.layers[i]);
  }
  Tensor<Scalar> dx = dy + dchain;
  if (p.sca) dx += patch_embed(sca_backward(*p.sca, cache.grid, patch_unembed(dy, h, w), *grads.sca));
  return dx;
}

}  // namespace sfsr
