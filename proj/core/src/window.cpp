/* Copyright 2026 The MSwin Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "mswin/window.hpp"

#include <algorithm>
#include <map>

#include "autograd.hpp"

namespace mswin {

WindowGrid WindowGrid::make(std::int64_t height, std::int64_t width, std::int64_t window,
                            std::int64_t shift) {
  if (window <= 0) throw ConfigError("window size must be positive, got " + std::to_string(window));
  if (shift < 0 || shift >= window) {
    throw ConfigError("shift must satisfy 0 <= n < m, got m=" + std::to_string(window) +
                      " n=" + std::to_string(shift));
  }
  if (height <= 0 || width <= 0) throw DimensionError("window grid over an empty map");
  WindowGrid g;
  g.window = window;
  g.shift = shift;
  g.height = height;
  g.width = width;
  g.padded_height = (height + window - 1) / window * window;
  g.padded_width = (width + window - 1) / window * window;
  g.pad_bottom = g.padded_height - height;
  g.pad_right = g.padded_width - width;
  return g;
}

namespace {

// Moves whole C-vectors between two flat layouts given a per-image index map.
template <class Real>
Tensor<Real> move_tokens(const Tensor<Real>& x, Shape out_shape, std::int64_t images,
                         std::int64_t in_per_image, std::int64_t out_per_image, std::int64_t C,
                         std::vector<std::int64_t> source, OpKind kind) {
  Tensor<Real> y(std::move(out_shape));
  auto xv = x.values();
  auto yv = y.values();
  for (std::int64_t n = 0; n < images; ++n) {
    for (std::int64_t p = 0; p < out_per_image; ++p) {
      const auto s = source[p];
      if (s < 0) continue;
      std::copy_n(xv.data() + (n * in_per_image + s) * C, C,
                  yv.data() + (n * out_per_image + p) * C);
    }
  }
  if (detail::wants_grad<Real>({&x})) {
    detail::record<Real>(kind, {x}, y,
                         [x, y, source = std::move(source), images, in_per_image, out_per_image,
                          C]() mutable {
                           auto gx = x.grad();
                           auto gy = y.grad();
                           for (std::int64_t n = 0; n < images; ++n) {
                             for (std::int64_t p = 0; p < out_per_image; ++p) {
                               const auto s = source[p];
                               if (s < 0) continue;
                               Real* dst = gx.data() + (n * in_per_image + s) * C;
                               const Real* g = gy.data() + (n * out_per_image + p) * C;
                               for (std::int64_t k = 0; k < C; ++k) dst[k] += g[k];
                             }
                           }
                         });
  }
  return y;
}

}  // namespace

template <class Real>
Tensor<Real> window_partition(const Tensor<Real>& x, const WindowGrid& grid) {
  const auto s = detail::spatial_dims(x.shape(), "window_partition");
  const bool plain = s.h == grid.height && s.w == grid.width;
  const bool prepadded = s.h == grid.padded_height && s.w == grid.padded_width;
  if (!plain && !prepadded) {
    throw DimensionError("window_partition: map " + shape_string(x.shape()) +
                         " does not match grid " + std::to_string(grid.height) + "x" +
                         std::to_string(grid.width));
  }
  const auto m = grid.window;
  const auto T = grid.tokens_per_window();
  const auto nw = grid.num_windows();
  const auto wx = grid.windows_x();
  std::vector<std::int64_t> source(static_cast<std::size_t>(nw * T));
  for (std::int64_t w = 0; w < nw; ++w) {
    for (std::int64_t t = 0; t < T; ++t) {
      const auto r = (w / wx) * m + t / m;
      const auto c = (w % wx) * m + t % m;
      source[w * T + t] = (r < s.h && c < s.w) ? r * s.w + c : -1;
    }
  }
  return move_tokens(x, Shape{s.n * nw, T, s.c}, s.n, s.h * s.w, nw * T, s.c, std::move(source),
                     OpKind::kWindowPartition);
}

template <class Real>
Tensor<Real> window_reverse(const Tensor<Real>& windows, const WindowGrid& grid, bool crop,
                            bool batched) {
  if (windows.rank() != 3 || windows.dim(1) != grid.tokens_per_window()) {
    throw DimensionError("window_reverse: expected [windows, " +
                         std::to_string(grid.tokens_per_window()) + ", C], got " +
                         shape_string(windows.shape()));
  }
  const auto nw = grid.num_windows();
  if (windows.dim(0) % nw != 0) {
    throw DimensionError("window_reverse: " + std::to_string(windows.dim(0)) +
                         " windows is not a multiple of " + std::to_string(nw));
  }
  const auto images = windows.dim(0) / nw;
  const auto C = windows.dim(2);
  const auto m = grid.window;
  const auto T = grid.tokens_per_window();
  const auto wx = grid.windows_x();
  const auto oh = crop ? grid.height : grid.padded_height;
  const auto ow = crop ? grid.width : grid.padded_width;
  std::vector<std::int64_t> source(static_cast<std::size_t>(oh * ow));
  for (std::int64_t r = 0; r < oh; ++r) {
    for (std::int64_t c = 0; c < ow; ++c) {
      const auto w = (r / m) * wx + c / m;
      const auto t = (r % m) * m + c % m;
      source[r * ow + c] = w * T + t;
    }
  }
  Shape out = (batched || images != 1) ? Shape{images, oh, ow, C} : Shape{oh, ow, C};
  return move_tokens(windows, std::move(out), images, nw * T, oh * ow, C, std::move(source),
                     OpKind::kWindowReverse);
}

template <class Real>
Tensor<Real> cyclic_shift(const Tensor<Real>& x, std::int64_t dy, std::int64_t dx) {
  const auto s = detail::spatial_dims(x.shape(), "cyclic_shift");
  std::vector<std::int64_t> source(static_cast<std::size_t>(s.h * s.w));
  const auto wrap = [](std::int64_t v, std::int64_t n) { return ((v % n) + n) % n; };
  for (std::int64_t r = 0; r < s.h; ++r) {
    for (std::int64_t c = 0; c < s.w; ++c) {
      source[r * s.w + c] = wrap(r + dy, s.h) * s.w + wrap(c + dx, s.w);
    }
  }
  return move_tokens(x, x.shape(), s.n, s.h * s.w, s.h * s.w, s.c, std::move(source),
                     OpKind::kCyclicShift);
}

std::vector<int> shifted_region_ids(const WindowGrid& grid) {
  const auto Hp = grid.padded_height, Wp = grid.padded_width;
  const auto m = grid.window, n = grid.shift;
  const auto slice = [&](std::int64_t v, std::int64_t extent) -> int {
    if (n == 0) return 0;
    if (v < extent - m) return 0;
    if (v < extent - n) return 1;
    return 2;
  };
  std::vector<int> ids(static_cast<std::size_t>(Hp * Wp));
  for (std::int64_t r = 0; r < Hp; ++r) {
    for (std::int64_t c = 0; c < Wp; ++c) {
      // Position in the padded map before the roll.
      const auto r0 = (r + n) % Hp;
      const auto c0 = (c + n) % Wp;
      const bool real = r0 < grid.height && c0 < grid.width;
      ids[r * Wp + c] = real ? 3 * slice(r, Hp) + slice(c, Wp) : kPaddingRegion;
    }
  }
  return ids;
}

std::optional<ShiftMask> window_attention_mask(const WindowGrid& grid) {
  if (grid.shift == 0 && !grid.padded()) return std::nullopt;
  const auto ids = shifted_region_ids(grid);
  const auto m = grid.window;
  const auto T = grid.tokens_per_window();
  const auto wx = grid.windows_x();
  const auto Wp = grid.padded_width;

  ShiftMask mask;
  mask.tokens = T;
  std::map<std::vector<int>, int> seen;
  for (std::int64_t w = 0; w < grid.num_windows(); ++w) {
    std::vector<int> local(static_cast<std::size_t>(T));
    for (std::int64_t t = 0; t < T; ++t) {
      const auto r = (w / wx) * m + t / m;
      const auto c = (w % wx) * m + t % m;
      local[t] = ids[r * Wp + c];
    }
    auto [it, inserted] = seen.try_emplace(local, static_cast<int>(seen.size()));
    if (inserted) {
      for (std::int64_t i = 0; i < T; ++i) {
        for (std::int64_t j = 0; j < T; ++j) {
          mask.patterns.push_back(local[i] == local[j] ? 0.0f : kMaskedScore);
        }
      }
    }
    mask.window_pattern.push_back(it->second);
  }
  return mask;
}

ShiftMask shift_attention_mask(const WindowGrid& grid) {
  if (grid.shift == 0) throw ConfigError("shift_attention_mask: shift is 0, no mask needed");
  return *window_attention_mask(grid);
}

std::vector<std::int32_t> relative_position_index(std::int64_t window) {
  if (window < 1) throw ConfigError("relative_position_index: window must be >= 1");
  const auto m = window;
  const auto T = m * m;
  const auto span = 2 * m - 1;
  std::vector<std::int32_t> index(static_cast<std::size_t>(T * T));
  for (std::int64_t i = 0; i < T; ++i) {
    for (std::int64_t j = 0; j < T; ++j) {
      const auto dr = i / m - j / m;
      const auto dc = i % m - j % m;
      index[i * T + j] = static_cast<std::int32_t>((dr + m - 1) * span + (dc + m - 1));
    }
  }
  return index;
}

template Tensor<float> window_partition(const Tensor<float>&, const WindowGrid&);
template Tensor<double> window_partition(const Tensor<double>&, const WindowGrid&);
template Tensor<float> window_reverse(const Tensor<float>&, const WindowGrid&, bool, bool);
template Tensor<double> window_reverse(const Tensor<double>&, const WindowGrid&, bool, bool);
template Tensor<float> cyclic_shift(const Tensor<float>&, std::int64_t, std::int64_t);
template Tensor<double> cyclic_shift(const Tensor<double>&, std::int64_t, std::int64_t);

}  // namespace mswin
