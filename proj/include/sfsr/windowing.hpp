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

// Token and window bookkeeping for shifted-window attention.

#pragma once

#include "sfsr/ops.hpp"
#include "sfsr/tensor.hpp"

namespace sfsr {

inline constexpr double kMaskPenalty = 100.0;

struct WindowLayout {
  Index height = 0;
  Index width = 0;
  Index window = 1;
  Index shift = 0;

  void validate() const {
    if (window <= 0) throw ValueError("window size must be positive");
    if (shift < 0 || shift >= window) throw ValueError("shift must lie in [0, window)");
    if (height <= 0 || width <= 0 || height % window != 0 || width % window != 0) {
      throw ShapeError("feature extents " + std::to_string(height) + "x" + std::to_string(width) +
                       " not divisible by window " + std::to_string(window));
    }
  }
  Index tokens_per_window() const { return window * window; }
  Index num_windows() const { return (height / window) * (width / window); }
};

/// [N,C,H,W] -> [N,H*W,C], token index h*W + w.
template <typename Scalar>
Tensor<Scalar> patch_embed(const Tensor<Scalar>& x) {
  if (x.rank() != 4) throw ShapeError("patch_embed expects NCHW");
  const Index n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  Tensor<Scalar> t({n, hw, c});
  for (Index b = 0; b < n; ++b) {
    t.matrix(n * hw, c).block(b * hw, 0, hw, c) = x.matrix(n * c, hw).block(b * c, 0, c, hw).transpose();
  }
  return t;
}

/// Embedding followed by a learned layer norm over channels.
template <typename Scalar>
Tensor<Scalar> patch_embed(const Tensor<Scalar>& x, const Tensor<Scalar>& gamma,
                           const Tensor<Scalar>& beta) {
  return layer_norm(patch_embed(x), gamma, beta);
}

template <typename Scalar>
Tensor<Scalar> patch_unembed(const Tensor<Scalar>& tokens, Index h, Index w) {
  if (tokens.rank() != 3) throw ShapeError("patch_unembed expects [N,L,C]");
  const Index n = tokens.dim(0), hw = tokens.dim(1), c = tokens.dim(2);
  if (hw != h * w) {
    throw ShapeError("patch_unembed: " + std::to_string(hw) + " tokens for a " + std::to_string(h) +
                     "x" + std::to_string(w) + " grid");
  }
  Tensor<Scalar> x({n, c, h, w});
  for (Index b = 0; b < n; ++b) {
    x.matrix(n * c, hw).block(b * c, 0, c, hw) = tokens.matrix(n * hw, c).block(b * hw, 0, hw, c).transpose();
  }
  return x;
}

/// [N,H,W,C] -> [N*(H/w)*(W/w), w*w, C]; row-major over tiles and within tiles.
template <typename Scalar>
Tensor<Scalar> window_partition(const Tensor<Scalar>& x, Index window) {
  if (x.rank() != 4) throw ShapeError("window_partition expects [N,H,W,C]");
  const Index n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  WindowLayout{h, w, window, 0}.validate();
  const Index th = h / window, tw = w / window;
  Tensor<Scalar> out({n * th * tw, window * window, c});
  Index dst = 0;
  for (Index b = 0; b < n; ++b)
    for (Index bi = 0; bi < th; ++bi)
      for (Index bj = 0; bj < tw; ++bj)
        for (Index i = 0; i < window; ++i)
          for (Index j = 0; j < window; ++j, ++dst)
            for (Index ch = 0; ch < c; ++ch)
              out[dst * c + ch] = x(b, bi * window + i, bj * window + j, ch);
  return out;
}

template <typename Scalar>
Tensor<Scalar> window_reverse(const Tensor<Scalar>& windows, Index window, Index h, Index w) {
  if (windows.rank() != 3) throw ShapeError("window_reverse expects [B,w*w,C]");
  WindowLayout{h, w, window, 0}.validate();
  const Index th = h / window, tw = w / window, c = windows.dim(2);
  if (windows.dim(1) != window * window || windows.dim(0) % (th * tw) != 0) {
    throw ShapeError("window_reverse: window tensor " + shape_string(windows.shape()) +
                     " does not tile " + std::to_string(h) + "x" + std::to_string(w));
  }
  const Index n = windows.dim(0) / (th * tw);
  Tensor<Scalar> x({n, h, w, c});
  Index src = 0;
  for (Index b = 0; b < n; ++b)
    for (Index bi = 0; bi < th; ++bi)
      for (Index bj = 0; bj < tw; ++bj)
        for (Index i = 0; i < window; ++i)
          for (Index j = 0; j < window; ++j, ++src)
            for (Index ch = 0; ch < c; ++ch)
              x(b, bi * window + i, bj * window + j, ch) = windows[src * c + ch];
  return x;
}

/// Toroidal roll by (-s, -s) over the H and W axes of [N,H,W,C]:
/// y[h][w] = x[(h+s) mod H][(w+s) mod W]. A negative s rolls the other way.
template <typename Scalar>
Tensor<Scalar> cyclic_shift(const Tensor<Scalar>& x, Index s) {
  if (x.rank() != 4) throw ShapeError("cyclic_shift expects [N,H,W,C]");
  const Index n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  Tensor<Scalar> y(x.shape());
  for (Index b = 0; b < n; ++b)
    for (Index i = 0; i < h; ++i)
      for (Index j = 0; j < w; ++j) {
        const Index si = ((i + s) % h + h) % h;
        const Index sj = ((j + s) % w + w) % w;
        for (Index ch = 0; ch < c; ++ch) y(b, i, j, ch) = x(b, si, sj, ch);
      }
  return y;
}

/// Region id of every position of the shifted grid, using the
/// [0, H-w), [H-w, H-s), [H-s, H) slicing in each axis.
inline Eigen::MatrixXi shifted_region_ids(const WindowLayout& layout) {
  layout.validate();
  const auto band = [&](Index i, Index extent) -> int {
    if (layout.shift == 0) return 0;
    if (i < extent - layout.window) return 0;
    if (i < extent - layout.shift) return 1;
    return 2;
  };
  Eigen::MatrixXi ids(layout.height, layout.width);
  for (Index i = 0; i < layout.height; ++i)
    for (Index j = 0; j < layout.width; ++j) ids(i, j) = band(i, layout.height) * 3 + band(j, layout.width);
  return ids;
}

/// Additive attention mask [num_windows, w*w, w*w]: 0 within a region, -100 across.
template <typename Scalar = float>
Tensor<Scalar> attention_mask(const WindowLayout& layout) {
  const auto ids = shifted_region_ids(layout);
  const Index w = layout.window, tw = layout.width / w, n2 = w * w;
  Tensor<Scalar> mask({layout.num_windows(), n2, n2});
  for (Index k = 0; k < layout.num_windows(); ++k) {
    const Index bi = k / tw, bj = k % tw;
    for (Index p = 0; p < n2; ++p)
      for (Index q = 0; q < n2; ++q) {
        const int rp = ids(bi * w + p / w, bj * w + p % w);
        const int rq = ids(bi * w + q / w, bj * w + q % w);
        mask(k, p, q) = rp == rq ? Scalar(0) : Scalar(-kMaskPenalty);
      }
  }
  return mask;
}

/// index[i][j] = (dh + w-1)*(2w-1) + (dw + w-1), dh/dw the coordinate
/// differences of window positions i and j.
inline Eigen::MatrixXi relative_position_index(Index window) {
  if (window <= 0) throw ValueError("window size must be positive");
  const Index n2 = window * window;
  Eigen::MatrixXi index(n2, n2);
  for (Index i = 0; i < n2; ++i)
    for (Index j = 0; j < n2; ++j) {
      const Index dh = i / window - j / window;
      const Index dw = i % window - j % window;
      index(i, j) = static_cast<int>((dh + window - 1) * (2 * window - 1) + (dw + window - 1));
    }
  return index;
}

inline Index relative_bias_table_size(Index window) { return (2 * window - 1) * (2 * window - 1); }

/// Original token index (h*W + w) for every slot of every shifted window.
/// Row k lists window k's positions in the same order window_partition uses
/// after cyclic_shift(x, shift).
inline Eigen::MatrixXi window_token_indices(const WindowLayout& layout) {
  layout.validate();
  const Index w = layout.window, tw = layout.width / w;
  Eigen::MatrixXi idx(layout.num_windows(), w * w);
  for (Index k = 0; k < layout.num_windows(); ++k) {
    const Index bi = k / tw, bj = k % tw;
    for (Index p = 0; p < w * w; ++p) {
      const Index h = (bi * w + p / w + layout.shift) % layout.height;
      const Index x = (bj * w + p % w + layout.shift) % layout.width;
      idx(k, p) = static_cast<int>(h * layout.width + x);
    }
  }
  return idx;
}

}  // namespace sfsr
