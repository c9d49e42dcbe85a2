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

// The full network: shallow conv, DCA chain and iRSTB chain in parallel,
// three-way feature sum, 1x1 conv + pixel shuffle reconstruction.

#pragma once

#include "sfsr/blocks.hpp"
#include "sfsr/ops.hpp"
#include "sfsr/tensor.hpp"
#include "sfsr/windowing.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace sfsr {

struct BlockCounts {
  Index irstb = 4;
  Index dca = 4;
  Index sca = 4;            // SCA branches, attached to the first `sca` iRSTBs
  Index stlc_per_irstb = 6;
};

struct ModelConfig {
  Index scale = 2;
  Index embed_channels = 60;
  Index window = 8;
  Index heads = 6;
  BlockCounts counts;
  Index mlp_expansion = 2;
  Index image_channels = 3;

  Index hidden() const { return mlp_expansion * embed_channels; }

  void validate() const {
    if (scale != 2 && scale != 4) throw ValueError("scale must be 2 or 4");
    if (embed_channels <= 0) throw ValueError("embed_channels must be positive");
    if (window <= 0) throw ValueError("window must be positive");
    if (heads <= 0 || embed_channels % heads != 0) throw ValueError("heads must divide embed_channels");
    if (counts.irstb < 1 || counts.dca < 1 || counts.sca < 1 || counts.stlc_per_irstb < 1) {
      throw ValueError("block counts must all be >= 1");
    }
    if (counts.sca > counts.irstb) throw ValueError("n_sca cannot exceed n_irstb (one SCA branch per iRSTB)");
    if (mlp_expansion < 1) throw ValueError("mlp_expansion must be >= 1");
    if (image_channels != 3) throw ValueError("image_channels must be 3");
  }

  friend bool operator==(const ModelConfig& a, const ModelConfig& b) {
    return a.scale == b.scale && a.embed_channels == b.embed_channels && a.window == b.window &&
           a.heads == b.heads && a.counts.irstb == b.counts.irstb && a.counts.dca == b.counts.dca &&
           a.counts.sca == b.counts.sca && a.counts.stlc_per_irstb == b.counts.stlc_per_irstb &&
           a.mlp_expansion == b.mlp_expansion && a.image_channels == b.image_channels;
  }

  /// C=16, w=4, two heads, one block of each kind, two STLc layers.
  static ModelConfig tiny(Index scale = 2) {
    ModelConfig c;
    c.scale = scale;
    c.embed_channels = 16;
    c.window = 4;
    c.heads = 2;
    c.counts = {1, 1, 1, 2};
    return c;
  }
};

template <typename Scalar>
struct ModelParams {
  ConvParams<Scalar> lf;
  std::vector<DcaParams<Scalar>> dca;
  NormParams<Scalar> embed_norm;
  std::vector<IrstbParams<Scalar>> irstb;
  ConvParams<Scalar> rec;

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    const std::string p = prefix.empty() ? "" : prefix + ".";
    lf.visit(p + "lf", f);
    for (std::size_t i = 0; i < dca.size(); ++i) dca[i].visit(p + "dca." + std::to_string(i), f);
    embed_norm.visit(p + "embed.norm", f);
    for (std::size_t i = 0; i < irstb.size(); ++i) irstb[i].visit(p + "irstb." + std::to_string(i), f);
    rec.visit(p + "rec", f);
  }
};

template <typename Scalar>
using NamedParams = std::vector<std::pair<std::string, Tensor<Scalar>*>>;

template <typename Scalar>
NamedParams<Scalar> named_parameters(ModelParams<Scalar>& p) {
  NamedParams<Scalar> out;
  p.visit("", [&](const std::string& name, Tensor<Scalar>& t) { out.emplace_back(name, &t); });
  return out;
}

template <typename Scalar>
std::vector<std::pair<std::string, const Tensor<Scalar>*>> named_parameters(const ModelParams<Scalar>& p) {
  std::vector<std::pair<std::string, const Tensor<Scalar>*>> out;
  const_cast<ModelParams<Scalar>&>(p).visit(
      "", [&](const std::string& name, Tensor<Scalar>& t) { out.emplace_back(name, &t); });
  return out;
}

/// Zero-valued parameter set with the shapes implied by `config`; norms are
/// the identity (gamma 1, beta 0).
template <typename Scalar>
ModelParams<Scalar> zero_parameters(const ModelConfig& config) {
  config.validate();
  const Index c = config.embed_channels;
  const Index r2 = config.scale * config.scale;
  ModelParams<Scalar> p;
  p.lf = ConvParams<Scalar>::zeros(c, config.image_channels, ConvSpec::same(3));
  for (Index i = 0; i < config.counts.dca; ++i) p.dca.push_back(DcaParams<Scalar>::zeros(c));
  p.embed_norm = NormParams<Scalar>::identity(c);
  for (Index i = 0; i < config.counts.irstb; ++i) {
    IrstbParams<Scalar> block;
    for (Index j = 0; j < config.counts.stlc_per_irstb; ++j) {
      block.layers.push_back(StlcParams<Scalar>::init(c, config.heads, config.window, config.hidden()));
    }
    if (i < config.counts.sca) block.sca = ScaParams<Scalar>::zeros(c);
    p.irstb.push_back(std::move(block));
  }
  p.rec = ConvParams<Scalar>::zeros(config.image_channels * r2, c, ConvSpec::pointwise());
  return p;
}

template <typename Scalar>
struct Model {
  ModelConfig config;
  ModelParams<Scalar> params;

  template <typename Other>
  Model<Other> cast() const {
    Model<Other> out{config, zero_parameters<Other>(config)};
    auto src = named_parameters(params);
    auto dst = named_parameters(out.params);
    for (std::size_t i = 0; i < src.size(); ++i) *dst[i].second = src[i].second->template cast<Other>();
    return out;
  }
};

inline constexpr double kInitStd = 0.02;

/// Deterministic initialization: truncated normal (std 0.02, cut at 2 std)
/// for weights and bias tables, zero biases, identity norms.
template <typename Scalar>
Model<Scalar> build(const ModelConfig& config, std::uint64_t seed) {
  Model<Scalar> model{config, zero_parameters<Scalar>(config)};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto ends_with = [](const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  for (auto& [name, t] : named_parameters(model.params)) {
    if (ends_with(name, ".bias") || ends_with(name, ".gamma") || ends_with(name, ".beta")) continue;
    for (Index i = 0; i < t->size(); ++i) {
      double z;
      do z = normal(rng);
      while (std::abs(z) > 2.0);
      (*t)[i] = static_cast<Scalar>(kInitStd * z);
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Forward / backward

template <typename Scalar>
struct ModelCache {
  Index in_h = 0, in_w = 0;
  Tensor<Scalar> padded;
  Tensor<Scalar> f_lf;
  std::vector<DcaCache<Scalar>> dca;
  Tensor<Scalar> embedded;  // patch_embed(f_lf) before the norm
  std::vector<IrstbCache<Scalar>> irstb;
  Tensor<Scalar> fused;
};

enum class Mode { Inference, Training };

namespace detail {
template <typename Scalar>
void check_stage(const Tensor<Scalar>& t, const char* stage) {
  if (!t.all_finite()) throw NumericError(std::string("non-finite activation in ") + stage);
}
inline Index round_up(Index v, Index m) { return (v + m - 1) / m * m; }
}  // namespace detail

/// Maps I_LR [N,3,H,W] to [N,3,H*r,W*r]. Inputs are reflection-padded to a
/// window multiple and the output cropped back. Inference clamps to [0,1].
template <typename Scalar>
Tensor<Scalar> forward(const Model<Scalar>& model, const Tensor<Scalar>& input, Mode mode = Mode::Inference,
                       ModelCache<Scalar>* cache = nullptr) {
  const ModelConfig& cfg = model.config;
  const ModelParams<Scalar>& p = model.params;
  if (input.rank() != 4 || input.dim(1) != cfg.image_channels) {
    throw ShapeError("forward expects [N,3,H,W], got " + shape_string(input.shape()));
  }
  const Index h = input.dim(2), w = input.dim(3);
  const Index hp = detail::round_up(h, cfg.window), wp = detail::round_up(w, cfg.window);

  Tensor<Scalar> padded = reflect_pad(input, hp - h, wp - w);
  Tensor<Scalar> f_lf = conv2d(padded, p.lf.weight, p.lf.bias, p.lf.spec);
  detail::check_stage(f_lf, "lf");

  if (cache) {
    cache->dca.assign(p.dca.size(), DcaCache<Scalar>());
    cache->irstb.assign(p.irstb.size(), IrstbCache<Scalar>());
  }
  Tensor<Scalar> f_sf = f_lf;
  for (std::size_t i = 0; i < p.dca.size(); ++i) {
    f_sf = dca(f_sf, p.dca[i], cache ? &cache->dca[i] : nullptr);
    detail::check_stage(f_sf, "dca");
  }

  Tensor<Scalar> embedded = patch_embed(f_lf);
  Tensor<Scalar> tokens = layer_norm(embedded, p.embed_norm.gamma, p.embed_norm.beta);
  for (std::size_t i = 0; i < p.irstb.size(); ++i) {
    tokens = irstb(tokens, hp, wp, p.irstb[i], cache ? &cache->irstb[i] : nullptr);
    detail::check_stage(tokens, "irstb");
  }

  Tensor<Scalar> fused = f_lf + f_sf + patch_unembed(tokens, hp, wp);
  Tensor<Scalar> out = crop(pixel_shuffle(conv2d(fused, p.rec.weight, p.rec.bias, p.rec.spec), cfg.scale),
                            h * cfg.scale, w * cfg.scale);
  detail::check_stage(out, "rec");

  if (cache) {
    cache->in_h = h;
    cache->in_w = w;
    cache->padded = std::move(padded);
    cache->f_lf = std::move(f_lf);
    cache->embedded = std::move(embedded);
    cache->fused = std::move(fused);
  }
  if (mode == Mode::Inference) out = clamp(std::move(out), Scalar(0), Scalar(1));
  return out;
}

/// Parameter gradients of a training-mode forward, given d(loss)/d(output).
template <typename Scalar>
ModelParams<Scalar> backward(const Model<Scalar>& model, const ModelCache<Scalar>& cache, const Tensor<Scalar>& dout) {
  const ModelConfig& cfg = model.config;
  const ModelParams<Scalar>& p = model.params;
  ModelParams<Scalar> g = zeros_like_params<Scalar>(p);
  const Index hp = cache.padded.dim(2), wp = cache.padded.dim(3);

  const Tensor<Scalar> drec = pixel_unshuffle(crop_backward(dout, hp * cfg.scale, wp * cfg.scale), cfg.scale);
  auto rec = conv2d_backward(cache.fused, p.rec.weight, p.rec.spec, drec);
  g.rec.weight += rec.dweight;
  g.rec.bias += rec.dbias;
  const Tensor<Scalar>& dfused = rec.dx;

  Tensor<Scalar> df_lf = dfused;

  Tensor<Scalar> dsf = dfused;
  for (std::size_t i = p.dca.size(); i-- > 0;) dsf = dca_backward(p.dca[i], cache.dca[i], dsf, g.dca[i]);
  df_lf += dsf;

  Tensor<Scalar> dtokens = patch_embed(dfused);
  for (std::size_t i = p.irstb.size(); i-- > 0;) {
    dtokens = irstb_backward(p.irstb[i], hp, wp, cache.irstb[i], dtokens, g.irstb[i]);
  }
  auto norm = layer_norm_backward(cache.embedded, p.embed_norm.gamma, dtokens);
  g.embed_norm.gamma += norm.dgamma;
  g.embed_norm.beta += norm.dbeta;
  df_lf += patch_unembed(norm.dx, hp, wp);

  auto lf = conv2d_backward(cache.padded, p.lf.weight, p.lf.spec, df_lf);
  g.lf.weight += lf.dweight;
  g.lf.bias += lf.dbias;
  return g;
}

// ---------------------------------------------------------------------------
// Parameter accounting (closed form, no model construction).

struct ParamBreakdown {
  Index h_lf = 0;
  Index dca = 0;
  Index embed_norm = 0;
  Index attention = 0;
  Index conv_mlp = 0;
  Index layer_norm = 0;  // STLc norms
  Index sca = 0;
  Index h_rec = 0;

  Index irstb() const { return attention + conv_mlp + layer_norm + sca; }
  Index total() const { return h_lf + dca + embed_norm + irstb() + h_rec; }
};

inline Index conv_param_count(Index c_in, Index c_out, Index kh, Index kw, Index groups = 1) {
  return kh * kw * (c_in / groups) * c_out + c_out;
}

inline Index conv_mlp_param_count(Index channels, Index hidden) {
  return channels * hidden + hidden + hidden * channels + channels;
}

inline ParamBreakdown param_count(const ModelConfig& cfg) {
  cfg.validate();
  const Index c = cfg.embed_channels, w = cfg.window;
  const Index stlc = cfg.counts.irstb * cfg.counts.stlc_per_irstb;
  ParamBreakdown b;
  b.h_lf = conv_param_count(cfg.image_channels, c, 3, 3);
  b.dca = cfg.counts.dca * (conv_param_count(c, c, 1, 1, c) + conv_param_count(c, c, 1, 1));
  b.embed_norm = 2 * c;
  b.attention = stlc * (conv_param_count(c, 3 * c, 1, 1) + conv_param_count(c, c, 1, 1) +
                        relative_bias_table_size(w) * cfg.heads);
  b.conv_mlp = stlc * conv_mlp_param_count(c, cfg.hidden());
  b.layer_norm = stlc * 4 * c;
  b.sca = cfg.counts.sca *
          (conv_param_count(c, c, 1, 1) + conv_param_count(c, c, 3, 3) + conv_param_count(c, c, 1, 1, c));
  b.h_rec = conv_param_count(c, cfg.image_channels * cfg.scale * cfg.scale, 1, 1);
  return b;
}

}  // namespace sfsr
