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

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mswin/tensor.hpp"

namespace mswin {

// Geometry of one window partition over an H x W map: window side m, shift n
// (0 <= n < m), and the bottom/right zero padding that makes both extents
// multiples of m. n == 0 is plain windowed attention.
struct WindowGrid {
  std::int64_t window = 0;
  std::int64_t shift = 0;
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::int64_t padded_height = 0;
  std::int64_t padded_width = 0;
  std::int64_t pad_bottom = 0;
  std::int64_t pad_right = 0;

  static WindowGrid make(std::int64_t height, std::int64_t width, std::int64_t window,
                         std::int64_t shift = 0);

  std::int64_t windows_y() const { return padded_height / window; }
  std::int64_t windows_x() const { return padded_width / window; }
  std::int64_t num_windows() const { return windows_y() * windows_x(); }
  std::int64_t tokens_per_window() const { return window * window; }
  bool padded() const { return pad_bottom > 0 || pad_right > 0; }
};

// Mask value standing in for -infinity.
inline constexpr float kMaskedScore = -1e9f;

// Additive attention masks, deduplicated: `patterns` holds P masks of
// T x T entries (T = m^2, row = query, col = key), `window_pattern[w]` selects
// the mask for window w of the row-major window grid.
struct ShiftMask {
  std::int64_t tokens = 0;
  std::vector<float> patterns;
  std::vector<int> window_pattern;

  std::int64_t num_patterns() const {
    return tokens == 0 ? 0 : static_cast<std::int64_t>(patterns.size()) / (tokens * tokens);
  }
  const float* pattern(std::int64_t p) const { return patterns.data() + p * tokens * tokens; }
  const float* for_window(std::int64_t w) const { return pattern(window_pattern[w]); }
};

/// [H, W, C] or [N, H, W, C] (extents H x W or already padded) ->
/// [N * windows, m^2, C]. Zero-pads bottom/right, tiles windows row-major and
/// flattens each window row-major.
template <class Real>
Tensor<Real> window_partition(const Tensor<Real>& x, const WindowGrid& grid);

/// Inverse of window_partition. With `crop` the padding is removed; otherwise
/// the padded map is returned. Output rank is 4 unless `batched` is false and
/// a single image is present.
template <class Real>
Tensor<Real> window_reverse(const Tensor<Real>& windows, const WindowGrid& grid, bool crop = true,
                            bool batched = true);

/// Torus roll: out[i, j] = x[(i + dy) mod H, (j + dx) mod W]; rolling by (n, n)
/// moves content up-left by n, and (-n, -n) undoes it.
template <class Real>
Tensor<Real> cyclic_shift(const Tensor<Real>& x, std::int64_t dy, std::int64_t dx);

/// Region id for every position of the padded grid after the cyclic shift, row
/// major. Real tokens carry 0..8 (3 x 3 slices induced by the shift; all 0 when
/// n == 0); padded tokens carry kPaddingRegion.
inline constexpr int kPaddingRegion = 9;
std::vector<int> shifted_region_ids(const WindowGrid& grid);

/// Mask forbidding cross-region attention (and attention onto padding). Empty
/// optional when neither shift nor padding requires one.
std::optional<ShiftMask> window_attention_mask(const WindowGrid& grid);

/// Shifted-window mask. Throws ConfigError for n == 0.
ShiftMask shift_attention_mask(const WindowGrid& grid);

/// T x T table (T = m^2) of indices into a (2m - 1)^2 bias table:
/// (dr + m - 1) * (2m - 1) + (dc + m - 1) with (dr, dc) = coord(i) - coord(j).
std::vector<std::int32_t> relative_position_index(std::int64_t window);

}  // namespace mswin
