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

// Tensor primitives and their adjoints. Every parameterized op has a
// `*_backward` that takes the forward inputs and the output gradient and
// returns input/parameter gradients.

#pragma once

#include "sfsr/tensor.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace sfsr {

// ---------------------------------------------------------------------------
// conv2d

struct ConvSpec {
  Index kernel_h = 1;
  Index kernel_w = 1;
  Index stride = 1;
  Index dilation = 1;
  Index groups = 1;
  Index pad_h = 0;
  Index pad_w = 0;

  static ConvSpec pointwise() { return {}; }
  static ConvSpec depthwise(Index channels) {
    ConvSpec s;
    s.groups = channels;
    return s;
  }
  /// Square kernel with "same" padding at stride 1.
  static ConvSpec same(Index k, Index dilation = 1) {
    ConvSpec s;
    s.kernel_h = s.kernel_w = k;
    s.dilation = dilation;
    s.pad_h = s.pad_w = dilation * (k - 1) / 2;
    return s;
  }

  Index out_extent(Index in, Index k, Index pad) const {
    const Index span = dilation * (k - 1) + 1;
    const Index num = in + 2 * pad - span;
    return num < 0 ? 0 : num / stride + 1;
  }
  Index out_h(Index h) const { return out_extent(h, kernel_h, pad_h); }
  Index out_w(Index w) const { return out_extent(w, kernel_w, pad_w); }
};

namespace detail {

struct ConvGeometry {
  Index n, c_in, h, w, c_out, h_out, w_out, cin_g, cout_g, taps;
};

template <typename Scalar>
ConvGeometry conv_geometry(const Shape& x, const Shape& weight, const ConvSpec& spec) {
  if (x.size() != 4 || weight.size() != 4) throw ShapeError("conv2d expects rank-4 input and weight");
  if (spec.kernel_h <= 0 || spec.kernel_w <= 0 || spec.stride <= 0 || spec.dilation <= 0 ||
      spec.groups <= 0 || spec.pad_h < 0 || spec.pad_w < 0) {
    throw ValueError("conv2d: invalid ConvSpec");
  }
  ConvGeometry g{};
  g.n = x[0];
  g.c_in = x[1];
  g.h = x[2];
  g.w = x[3];
  g.c_out = weight[0];
  if (g.c_in % spec.groups != 0 || g.c_out % spec.groups != 0) {
    throw ShapeError("conv2d: groups must divide in and out channels");
  }
  g.cin_g = g.c_in / spec.groups;
  g.cout_g = g.c_out / spec.groups;
  if (weight[1] != g.cin_g || weight[2] != spec.kernel_h || weight[3] != spec.kernel_w) {
    throw ShapeError("conv2d: weight shape " + shape_string(weight) + " inconsistent with input " +
                     shape_string(x));
  }
  g.h_out = spec.out_h(g.h);
  g.w_out = spec.out_w(g.w);
  if (g.h_out <= 0 || g.w_out <= 0) throw ShapeError("conv2d: non-positive output extent");
  g.taps = g.cin_g * spec.kernel_h * spec.kernel_w;
  return g;
}

// Gather one (batch, group) slab of the input into a taps x positions matrix.
template <typename Scalar>
void im2col(const Scalar* x, const ConvGeometry& g, const ConvSpec& s, Matrix<Scalar>& col) {
  col.setZero(g.taps, g.h_out * g.w_out);
  Index row = 0;
  for (Index c = 0; c < g.cin_g; ++c) {
    const Scalar* plane = x + c * g.h * g.w;
    for (Index ki = 0; ki < s.kernel_h; ++ki) {
      for (Index kj = 0; kj < s.kernel_w; ++kj, ++row) {
        for (Index oi = 0; oi < g.h_out; ++oi) {
          const Index ii = oi * s.stride - s.pad_h + ki * s.dilation;
          if (ii < 0 || ii >= g.h) continue;
          for (Index oj = 0; oj < g.w_out; ++oj) {
            const Index jj = oj * s.stride - s.pad_w + kj * s.dilation;
            if (jj < 0 || jj >= g.w) continue;
            col(row, oi * g.w_out + oj) = plane[ii * g.w + jj];
          }
        }
      }
    }
  }
}

template <typename Scalar>
void col2im(const Matrix<Scalar>& col, const ConvGeometry& g, const ConvSpec& s, Scalar* dx) {
  Index row = 0;
  for (Index c = 0; c < g.cin_g; ++c) {
    Scalar* plane = dx + c * g.h * g.w;
    for (Index ki = 0; ki < s.kernel_h; ++ki) {
      for (Index kj = 0; kj < s.kernel_w; ++kj, ++row) {
        for (Index oi = 0; oi < g.h_out; ++oi) {
          const Index ii = oi * s.stride - s.pad_h + ki * s.dilation;
          if (ii < 0 || ii >= g.h) continue;
          for (Index oj = 0; oj < g.w_out; ++oj) {
            const Index jj = oj * s.stride - s.pad_w + kj * s.dilation;
            if (jj < 0 || jj >= g.w) continue;
            plane[ii * g.w + jj] += col(row, oi * g.w_out + oj);
          }
        }
      }
    }
  }
}

}  // namespace detail

/// Grouped, dilated, strided 2-D convolution with zero padding (NCHW).
template <typename Scalar>
Tensor<Scalar> conv2d(const Tensor<Scalar>& x, const Tensor<Scalar>& weight,
                      const Tensor<Scalar>& bias, const ConvSpec& spec) {
  const auto g = detail::conv_geometry<Scalar>(x.shape(), weight.shape(), spec);
  if (bias.rank() != 1 || bias.dim(0) != g.c_out) throw ShapeError("conv2d: bias shape");
  Tensor<Scalar> y({g.n, g.c_out, g.h_out, g.w_out});
  const Index positions = g.h_out * g.w_out;
  Matrix<Scalar> col;
  for (Index n = 0; n < g.n; ++n) {
    for (Index grp = 0; grp < spec.groups; ++grp) {
      detail::im2col(x.data() + (n * g.c_in + grp * g.cin_g) * g.h * g.w, g, spec, col);
      ConstRowMatrixMap<Scalar> w(weight.data() + grp * g.cout_g * g.taps, g.cout_g, g.taps);
      RowMatrixMap<Scalar> out(y.data() + (n * g.c_out + grp * g.cout_g) * positions, g.cout_g,
                               positions);
      out.noalias() = w * col;
      out.colwise() += bias.array().segment(grp * g.cout_g, g.cout_g).matrix();
    }
  }
  return y;
}

template <typename Scalar>
struct ConvGrads {
  Tensor<Scalar> dx;
  Tensor<Scalar> dweight;
  Tensor<Scalar> dbias;
};

template <typename Scalar>
ConvGrads<Scalar> conv2d_backward(const Tensor<Scalar>& x, const Tensor<Scalar>& weight,
                                  const ConvSpec& spec, const Tensor<Scalar>& dy) {
  const auto g = detail::conv_geometry<Scalar>(x.shape(), weight.shape(), spec);
  if (dy.shape() != Shape{g.n, g.c_out, g.h_out, g.w_out}) throw ShapeError("conv2d_backward: dy shape");
  ConvGrads<Scalar> out{Tensor<Scalar>::zeros_like(x), Tensor<Scalar>::zeros_like(weight),
                        Tensor<Scalar>({g.c_out})};
  const Index positions = g.h_out * g.w_out;
  Matrix<Scalar> col;
  Matrix<Scalar> dcol;
  for (Index n = 0; n < g.n; ++n) {
    for (Index grp = 0; grp < spec.groups; ++grp) {
      const Index in_off = (n * g.c_in + grp * g.cin_g) * g.h * g.w;
      detail::im2col(x.data() + in_off, g, spec, col);
      ConstRowMatrixMap<Scalar> w(weight.data() + grp * g.cout_g * g.taps, g.cout_g, g.taps);
      RowMatrixMap<Scalar> dw(out.dweight.data() + grp * g.cout_g * g.taps, g.cout_g, g.taps);
      ConstRowMatrixMap<Scalar> d(dy.data() + (n * g.c_out + grp * g.cout_g) * positions, g.cout_g,
                                  positions);
      dw.noalias() += d * col.transpose();
      out.dbias.array().segment(grp * g.cout_g, g.cout_g) += d.rowwise().sum().array();
      dcol.noalias() = w.transpose() * d;
      detail::col2im(dcol, g, spec, out.dx.data() + in_off);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Token-wise linear map (kernel-1 1-D convolution over [N, L, C]).

template <typename Scalar>
Tensor<Scalar> conv1d_tokens(const Tensor<Scalar>& x, const Tensor<Scalar>& weight,
                             const Tensor<Scalar>& bias) {
  if (x.rank() != 3 || weight.rank() != 2 || bias.rank() != 1) {
    throw ShapeError("conv1d_tokens expects x[N,L,C], w[Cout,Cin], b[Cout]");
  }
  const Index rows = x.dim(0) * x.dim(1);
  const Index c_in = x.dim(2);
  const Index c_out = weight.dim(0);
  if (weight.dim(1) != c_in || bias.dim(0) != c_out) {
    throw ShapeError("conv1d_tokens: channel mismatch, x " + shape_string(x.shape()) + " w " +
                     shape_string(weight.shape()));
  }
  Tensor<Scalar> y({x.dim(0), x.dim(1), c_out});
  auto out = y.matrix(rows, c_out);
  out.noalias() = x.matrix(rows, c_in) * weight.matrix(c_out, c_in).transpose();
  out.rowwise() += bias.array().matrix().transpose();
  return y;
}

template <typename Scalar>
ConvGrads<Scalar> conv1d_tokens_backward(const Tensor<Scalar>& x, const Tensor<Scalar>& weight,
                                         const Tensor<Scalar>& dy) {
  const Index rows = x.dim(0) * x.dim(1);
  const Index c_in = x.dim(2);
  const Index c_out = weight.dim(0);
  ConvGrads<Scalar> g{Tensor<Scalar>::zeros_like(x), Tensor<Scalar>::zeros_like(weight),
                      Tensor<Scalar>({c_out})};
  const auto d = dy.matrix(rows, c_out);
  g.dx.matrix(rows, c_in).noalias() = d * weight.matrix(c_out, c_in);
  g.dweight.matrix(c_out, c_in).noalias() = d.transpose() * x.matrix(rows, c_in);
  g.dbias.array() = d.colwise().sum().transpose().array();
  return g;
}

// ---------------------------------------------------------------------------
// Layer normalization over the last axis.

inline constexpr double kLayerNormEps = 1e-5;

template <typename Scalar>
Tensor<Scalar> layer_norm(const Tensor<Scalar>& x, const Tensor<Scalar>& gamma,
                          const Tensor<Scalar>& beta, double eps = kLayerNormEps) {
  const Index c = x.shape().back();
  if (gamma.size() != c || beta.size() != c) throw ShapeError("layer_norm: gamma/beta size mismatch");
  const Index rows = x.size() / c;
  Tensor<Scalar> y(x.shape());
  const auto in = x.matrix(rows, c);
  auto out = y.matrix(rows, c);
  for (Index r = 0; r < rows; ++r) {
    const Scalar mean = in.row(r).mean();
    const Scalar var = (in.row(r).array() - mean).square().mean();
    const Scalar rstd = Scalar(1) / std::sqrt(var + Scalar(eps));
    out.row(r) = ((in.row(r).array() - mean) * rstd * gamma.array().transpose() +
                  beta.array().transpose())
                     .matrix();
  }
  return y;
}

template <typename Scalar>
struct NormGrads {
  Tensor<Scalar> dx;
  Tensor<Scalar> dgamma;
  Tensor<Scalar> dbeta;
};

template <typename Scalar>
NormGrads<Scalar> layer_norm_backward(const Tensor<Scalar>& x, const Tensor<Scalar>& gamma,
                                      const Tensor<Scalar>& dy, double eps = kLayerNormEps) {
  const Index c = x.shape().back();
  const Index rows = x.size() / c;
  NormGrads<Scalar> g{Tensor<Scalar>(x.shape()), Tensor<Scalar>({c}), Tensor<Scalar>({c})};
  const auto in = x.matrix(rows, c);
  const auto d = dy.matrix(rows, c);
  auto dx = g.dx.matrix(rows, c);
  Eigen::Array<Scalar, 1, Eigen::Dynamic> xhat(c);
  for (Index r = 0; r < rows; ++r) {
    const Scalar mean = in.row(r).mean();
    const Scalar var = (in.row(r).array() - mean).square().mean();
    const Scalar rstd = Scalar(1) / std::sqrt(var + Scalar(eps));
    xhat = (in.row(r).array() - mean) * rstd;
    const auto dxhat = (d.row(r).array() * gamma.array().transpose()).eval();
    g.dgamma.array() += (d.row(r).array() * xhat).transpose();
    g.dbeta.array() += d.row(r).array().transpose();
    dx.row(r) = (rstd * (dxhat - dxhat.mean() - xhat * (dxhat * xhat).mean())).matrix();
  }
  return g;
}

// ---------------------------------------------------------------------------
// Activations

template <typename Scalar>
Tensor<Scalar> relu(const Tensor<Scalar>& x) {
  Tensor<Scalar> y(x.shape());
  y.array() = x.array().max(Scalar(0));
  return y;
}

template <typename Scalar>
Tensor<Scalar> relu_backward(const Tensor<Scalar>& x, const Tensor<Scalar>& dy) {
  Tensor<Scalar> dx(x.shape());
  dx.array() = (x.array() > Scalar(0)).select(dy.array(), Scalar(0));
  return dx;
}

// Exact erf form.
template <typename Scalar>
Tensor<Scalar> gelu(const Tensor<Scalar>& x) {
  Tensor<Scalar> y(x.shape());
  const Scalar inv_sqrt2 = Scalar(1) / std::numbers::sqrt2_v<Scalar>;
  y.array() = x.array().unaryExpr(
      [inv_sqrt2](Scalar v) { return Scalar(0.5) * v * (Scalar(1) + std::erf(v * inv_sqrt2)); });
  return y;
}

template <typename Scalar>
Tensor<Scalar> gelu_backward(const Tensor<Scalar>& x, const Tensor<Scalar>& dy) {
  Tensor<Scalar> dx(x.shape());
  const Scalar inv_sqrt2 = Scalar(1) / std::numbers::sqrt2_v<Scalar>;
  const Scalar inv_sqrt2pi = std::numbers::inv_sqrtpi_v<Scalar> * inv_sqrt2;
  dx.array() = x.array().unaryExpr([=](Scalar v) {
    const Scalar cdf = Scalar(0.5) * (Scalar(1) + std::erf(v * inv_sqrt2));
    const Scalar pdf = inv_sqrt2pi * std::exp(Scalar(-0.5) * v * v);
    return cdf + v * pdf;
  }) * dy.array();
  return dx;
}

template <typename Scalar>
Tensor<Scalar> sigmoid(const Tensor<Scalar>& x) {
  Tensor<Scalar> y(x.shape());
  y.array() = x.array().unaryExpr([](Scalar v) { return Scalar(1) / (Scalar(1) + std::exp(-v)); });
  return y;
}

template <typename Scalar>
Tensor<Scalar> sigmoid_backward(const Tensor<Scalar>& y, const Tensor<Scalar>& dy) {
  Tensor<Scalar> dx(y.shape());
  dx.array() = dy.array() * y.array() * (Scalar(1) - y.array());
  return dx;
}

namespace detail {
// Splits a shape around `axis` into (outer, extent, inner) strides.
inline std::array<Index, 3> axis_split(const Shape& shape, Index axis) {
  const auto rank = static_cast<Index>(shape.size());
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) throw ShapeError("axis out of range");
  Index outer = 1, inner = 1;
  for (Index a = 0; a < axis; ++a) outer *= shape[a];
  for (Index a = axis + 1; a < rank; ++a) inner *= shape[a];
  return {outer, shape[axis], inner};
}
}  // namespace detail

template <typename Scalar>
Tensor<Scalar> softmax(const Tensor<Scalar>& x, Index axis = -1) {
  const auto [outer, n, inner] = detail::axis_split(x.shape(), axis);
  Tensor<Scalar> y(x.shape());
  for (Index o = 0; o < outer; ++o) {
    for (Index i = 0; i < inner; ++i) {
      const Index base = o * n * inner + i;
      Scalar m = x[base];
      for (Index k = 1; k < n; ++k) m = std::max(m, x[base + k * inner]);
      Scalar sum = 0;
      for (Index k = 0; k < n; ++k) sum += (y[base + k * inner] = std::exp(x[base + k * inner] - m));
      for (Index k = 0; k < n; ++k) y[base + k * inner] /= sum;
    }
  }
  return y;
}

template <typename Scalar>
Tensor<Scalar> softmax_backward(const Tensor<Scalar>& y, const Tensor<Scalar>& dy, Index axis = -1) {
  const auto [outer, n, inner] = detail::axis_split(y.shape(), axis);
  Tensor<Scalar> dx(y.shape());
  for (Index o = 0; o < outer; ++o) {
    for (Index i = 0; i < inner; ++i) {
      const Index base = o * n * inner + i;
      Scalar dot = 0;
      for (Index k = 0; k < n; ++k) dot += y[base + k * inner] * dy[base + k * inner];
      for (Index k = 0; k < n; ++k) {
        dx[base + k * inner] = y[base + k * inner] * (dy[base + k * inner] - dot);
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Pooling and rearrangements

template <typename Scalar>
Tensor<Scalar> adaptive_avg_pool_to_1x1(const Tensor<Scalar>& x) {
  if (x.rank() != 4) throw ShapeError("adaptive_avg_pool_to_1x1 expects NCHW");
  const Index planes = x.dim(0) * x.dim(1);
  const Index hw = x.dim(2) * x.dim(3);
  Tensor<Scalar> y({x.dim(0), x.dim(1), 1, 1});
  y.matrix(planes, 1) = x.matrix(planes, hw).rowwise().sum() / Scalar(hw);
  return y;
}

template <typename Scalar>
Tensor<Scalar> adaptive_avg_pool_to_1x1_backward(const Tensor<Scalar>& dy, Index h, Index w) {
  const Index planes = dy.dim(0) * dy.dim(1);
  Tensor<Scalar> dx({dy.dim(0), dy.dim(1), h, w});
  dx.matrix(planes, h * w) = (dy.matrix(planes, 1) / Scalar(h * w)).replicate(1, h * w);
  return dx;
}

/// Depth-to-space: y[n, c, h*r + a, w*r + b] = x[n, c*r*r + a*r + b, h, w].
template <typename Scalar>
Tensor<Scalar> pixel_shuffle(const Tensor<Scalar>& x, Index r) {
  if (x.rank() != 4 || r <= 0) throw ShapeError("pixel_shuffle expects NCHW and r >= 1");
  const Index n = x.dim(0), cr = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (cr % (r * r) != 0) throw ShapeError("pixel_shuffle: channels not divisible by r^2");
  const Index c = cr / (r * r);
  Tensor<Scalar> y({n, c, h * r, w * r});
  for (Index b = 0; b < n; ++b)
    for (Index ch = 0; ch < c; ++ch)
      for (Index a = 0; a < r; ++a)
        for (Index bb = 0; bb < r; ++bb)
          for (Index i = 0; i < h; ++i)
            for (Index j = 0; j < w; ++j)
              y(b, ch, i * r + a, j * r + bb) = x(b, ch * r * r + a * r + bb, i, j);
  return y;
}

/// Space-to-depth; exact inverse of pixel_shuffle and also its adjoint.
template <typename Scalar>
Tensor<Scalar> pixel_unshuffle(const Tensor<Scalar>& y, Index r) {
  if (y.rank() != 4 || r <= 0) throw ShapeError("pixel_unshuffle expects NCHW and r >= 1");
  const Index n = y.dim(0), c = y.dim(1), hr = y.dim(2), wr = y.dim(3);
  if (hr % r != 0 || wr % r != 0) throw ShapeError("pixel_unshuffle: extents not divisible by r");
  const Index h = hr / r, w = wr / r;
  Tensor<Scalar> x({n, c * r * r, h, w});
  for (Index b = 0; b < n; ++b)
    for (Index ch = 0; ch < c; ++ch)
      for (Index a = 0; a < r; ++a)
        for (Index bb = 0; bb < r; ++bb)
          for (Index i = 0; i < h; ++i)
            for (Index j = 0; j < w; ++j)
              x(b, ch * r * r + a * r + bb, i, j) = y(b, ch, i * r + a, j * r + bb);
  return x;
}

// ---------------------------------------------------------------------------
// Bicubic resampling (Keys, a = -0.5, clamp-to-edge, renormalized taps).

inline constexpr double kBicubicA = -0.5;

inline double keys_cubic(double t, double a = kBicubicA) {
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

struct ResampleTaps {
  // Per output sample: four clamped source indices and normalized weights.
  std::vector<std::array<Index, 4>> index;
  std::vector<std::array<double, 4>> weight;
  // Tap used as the reference value (nearest integer tap, clamped).
  std::vector<Index> anchor;
};

inline ResampleTaps bicubic_taps(Index in, Index out) {
  if (in <= 0 || out <= 0) throw ShapeError("bicubic_resize: extents must be >= 1");
  ResampleTaps taps;
  taps.index.resize(out);
  taps.weight.resize(out);
  taps.anchor.resize(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (Index d = 0; d < out; ++d) {
    const double src = (static_cast<double>(d) + 0.5) * scale - 0.5;
    const auto base = static_cast<Index>(std::floor(src));
    double sum = 0.0;
    for (int k = 0; k < 4; ++k) {
      const Index tap = base - 1 + k;
      taps.index[d][k] = std::clamp<Index>(tap, 0, in - 1);
      taps.weight[d][k] = keys_cubic(src - static_cast<double>(tap));
      sum += taps.weight[d][k];
    }
    for (auto& wk : taps.weight[d]) wk /= sum;
    taps.anchor[d] = std::clamp<Index>(base, 0, in - 1);
  }
  return taps;
}

/// Separable bicubic resize of every plane of an NCHW tensor.
///
/// Each output is accumulated as anchor + sum(w_k * (x_k - anchor)), which is
/// the same linear map as sum(w_k * x_k) (the weights sum to one) but returns
/// constant planes bit-exactly.
template <typename Scalar>
Tensor<Scalar> bicubic_resize(const Tensor<Scalar>& x, Index out_h, Index out_w) {
  if (x.rank() != 4) throw ShapeError("bicubic_resize expects NCHW");
  const Index planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  const auto rows = bicubic_taps(h, out_h);
  const auto cols = bicubic_taps(w, out_w);
  Tensor<Scalar> y({x.dim(0), x.dim(1), out_h, out_w});
  std::vector<double> tmp(static_cast<std::size_t>(h * out_w));
  for (Index p = 0; p < planes; ++p) {
    const Scalar* src = x.data() + p * h * w;
    for (Index i = 0; i < h; ++i) {
      for (Index j = 0; j < out_w; ++j) {
        const double ref = src[i * w + cols.anchor[j]];
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) acc += cols.weight[j][k] * (src[i * w + cols.index[j][k]] - ref);
        tmp[i * out_w + j] = ref + acc;
      }
    }
    Scalar* dst = y.data() + p * out_h * out_w;
    for (Index i = 0; i < out_h; ++i) {
      for (Index j = 0; j < out_w; ++j) {
        const double ref = tmp[rows.anchor[i] * out_w + j];
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) acc += rows.weight[i][k] * (tmp[rows.index[i][k] * out_w + j] - ref);
        dst[i * out_w + j] = static_cast<Scalar>(ref + acc);
      }
    }
  }
  return y;
}

// ---------------------------------------------------------------------------
// Reflection padding (bottom/right) and cropping, NCHW.

inline Index reflect_index(Index i, Index n) {
  if (n == 1) return 0;
  const Index period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

template <typename Scalar>
Tensor<Scalar> reflect_pad(const Tensor<Scalar>& x, Index pad_bottom, Index pad_right) {
  const Index n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (pad_bottom == 0 && pad_right == 0) return x;
  Tensor<Scalar> y({n, c, h + pad_bottom, w + pad_right});
  for (Index p = 0; p < n * c; ++p)
    for (Index i = 0; i < h + pad_bottom; ++i)
      for (Index j = 0; j < w + pad_right; ++j)
        y[(p * (h + pad_bottom) + i) * (w + pad_right) + j] =
            x[(p * h + reflect_index(i, h)) * w + reflect_index(j, w)];
  return y;
}

template <typename Scalar>
Tensor<Scalar> reflect_pad_backward(const Tensor<Scalar>& dy, Index h, Index w) {
  const Index n = dy.dim(0), c = dy.dim(1), hp = dy.dim(2), wp = dy.dim(3);
  if (hp == h && wp == w) return dy;
  Tensor<Scalar> dx({n, c, h, w});
  for (Index p = 0; p < n * c; ++p)
    for (Index i = 0; i < hp; ++i)
      for (Index j = 0; j < wp; ++j)
        dx[(p * h + reflect_index(i, h)) * w + reflect_index(j, w)] += dy[(p * hp + i) * wp + j];
  return dx;
}

/// Top-left crop to (h, w).
template <typename Scalar>
Tensor<Scalar> crop(const Tensor<Scalar>& x, Index h, Index w) {
  const Index n = x.dim(0), c = x.dim(1), hs = x.dim(2), ws = x.dim(3);
  if (h > hs || w > ws) throw ShapeError("crop larger than input");
  if (h == hs && w == ws) return x;
  Tensor<Scalar> y({n, c, h, w});
  for (Index p = 0; p < n * c; ++p)
    for (Index i = 0; i < h; ++i)
      for (Index j = 0; j < w; ++j) y[(p * h + i) * w + j] = x[(p * hs + i) * ws + j];
  return y;
}

template <typename Scalar>
Tensor<Scalar> crop_backward(const Tensor<Scalar>& dy, Index hs, Index ws) {
  const Index n = dy.dim(0), c = dy.dim(1), h = dy.dim(2), w = dy.dim(3);
  if (h == hs && w == ws) return dy;
  Tensor<Scalar> dx({n, c, hs, ws});
  for (Index p = 0; p < n * c; ++p)
    for (Index i = 0; i < h; ++i)
      for (Index j = 0; j < w; ++j) dx[(p * hs + i) * ws + j] = dy[(p * h + i) * w + j];
  return dx;
}

template <typename Scalar>
Tensor<Scalar> clamp(Tensor<Scalar> x, Scalar lo, Scalar hi) {
  x.array() = x.array().max(lo).min(hi);
  return x;
}

}  // namespace sfsr
