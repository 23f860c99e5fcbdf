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

#include <gtest/gtest.h>

#include <set>

#include "mswin/error.hpp"
#include "mswin/window.hpp"
#include "test_util.hpp"

namespace mswin {
namespace {

using testing::random_tensor;

TEST(WindowGrid, PaddingBookkeeping) {
  const auto g = WindowGrid::make(5, 7, 3, 1);
  EXPECT_EQ(g.padded_height, 6);
  EXPECT_EQ(g.padded_width, 9);
  EXPECT_EQ(g.pad_bottom, 1);
  EXPECT_EQ(g.pad_right, 2);
  EXPECT_EQ(g.num_windows(), 6);
  EXPECT_THROW(WindowGrid::make(4, 4, 0), ConfigError);
  EXPECT_THROW(WindowGrid::make(4, 4, 3, 3), ConfigError);
  EXPECT_THROW(WindowGrid::make(4, 4, 3, -1), ConfigError);
}

TEST(WindowPartition, SixBySixIntoThreeByThree) {
  const auto out = window_partition(Tensor<float>({6, 6, 2}), WindowGrid::make(6, 6, 3));
  EXPECT_EQ(out.shape(), (Shape{4, 9, 2}));
}

TEST(WindowPartition, SixBySixIntoTwoByTwo) {
  const auto out = window_partition(Tensor<float>({6, 6, 2}), WindowGrid::make(6, 6, 2));
  EXPECT_EQ(out.shape(), (Shape{9, 4, 2}));
}

TEST(WindowPartition, PaddedFiveByFiveMatchesIndexMap) {
  Rng rng(1);
  const auto x = random_tensor({5, 5, 2}, rng);
  const auto grid = WindowGrid::make(5, 5, 3);
  const auto out = window_partition(x, grid);
  ASSERT_EQ(out.shape(), (Shape{4, 9, 2}));
  int padded = 0;
  for (int w = 0; w < 4; ++w) {
    for (int t = 0; t < 9; ++t) {
      const int r = (w / 2) * 3 + t / 3, c = (w % 2) * 3 + t % 3;
      for (int ch = 0; ch < 2; ++ch) {
        const double expected = (r < 5 && c < 5) ? x.values()[(r * 5 + c) * 2 + ch] : 0.0;
        EXPECT_EQ(out.values()[(w * 9 + t) * 2 + ch], expected);
      }
      padded += (r >= 5 || c >= 5);
    }
  }
  EXPECT_EQ(padded, 36 - 25);
  const auto ids = shifted_region_ids(grid);
  EXPECT_EQ(std::count(ids.begin(), ids.end(), kPaddingRegion), 11);
}

TEST(WindowReverse, RoundTripSixBySix) {
  Rng rng(2);
  const auto x = random_tensor({6, 6, 4}, rng);
  const auto grid = WindowGrid::make(6, 6, 3);
  EXPECT_TRUE(testing::bit_equal(window_reverse(window_partition(x, grid), grid, true, false), x));
}

TEST(WindowReverse, RoundTripWithPadding) {
  Rng rng(3);
  const auto x = random_tensor({1, 7, 7, 3}, rng);
  const auto grid = WindowGrid::make(7, 7, 4);
  const auto windows = window_partition(x, grid);
  EXPECT_EQ(windows.shape(), (Shape{4, 16, 3}));
  EXPECT_TRUE(testing::bit_equal(window_reverse(windows, grid), x));
  EXPECT_EQ(window_reverse(windows, grid, false).shape(), (Shape{1, 8, 8, 3}));
}

TEST(WindowReverse, SingleWindowIsReshape) {
  Rng rng(4);
  const auto x = random_tensor({5, 5, 2}, rng);
  const auto windows = window_partition(x, WindowGrid::make(5, 5, 5));
  ASSERT_EQ(windows.shape(), (Shape{1, 25, 2}));
  EXPECT_TRUE(std::equal(windows.values().begin(), windows.values().end(), x.values().begin()));
}

TEST(WindowReverse, RejectsInconsistentCounts) {
  const auto grid = WindowGrid::make(6, 6, 3);
  EXPECT_THROW(window_reverse(Tensor<float>({3, 9, 2}), grid), DimensionError);
  EXPECT_THROW(window_reverse(Tensor<float>({4, 8, 2}), grid), DimensionError);
}

TEST(WindowReverse, ExhaustiveRoundTrip) {
  Rng rng(5);
  for (const std::int64_t m : {2, 3, 5, 7, 12}) {
    for (std::int64_t h = 1; h <= 16; ++h) {
      for (std::int64_t w = 1; w <= 16; ++w) {
        const auto x = random_tensor({2, h, w, 2}, rng);
        const auto grid = WindowGrid::make(h, w, m);
        ASSERT_TRUE(testing::bit_equal(window_reverse(window_partition(x, grid), grid), x))
            << "m=" << m << " h=" << h << " w=" << w;
      }
    }
  }
}

TEST(CyclicShift, ZeroShiftIsIdentity) {
  Rng rng(6);
  const auto x = random_tensor({6, 6, 3}, rng);
  EXPECT_TRUE(testing::bit_equal(cyclic_shift(x, 0, 0), x));
}

TEST(CyclicShift, ShiftThenUnshift) {
  Rng rng(7);
  const auto x = random_tensor({6, 6, 3}, rng);
  for (int n = 1; n < 6; ++n) {
    EXPECT_TRUE(testing::bit_equal(cyclic_shift(cyclic_shift(x, n, n), -n, -n), x));
  }
}

TEST(CyclicShift, TwoByTwoCoordinateArithmetic) {
  // [[a, b], [c, d]] rolled by (1, 1) -> [[d, c], [b, a]]
  const Tensor<double> x({2, 2, 1}, std::vector<double>{1, 2, 3, 4});
  const auto y = cyclic_shift(x, 1, 1);
  EXPECT_EQ(std::vector<double>(y.values().begin(), y.values().end()),
            (std::vector<double>{4, 3, 2, 1}));
}

TEST(CyclicShift, IsABijection) {
  Tensor<double> x({5, 7, 1});
  for (std::int64_t i = 0; i < x.numel(); ++i) x.values()[i] = static_cast<double>(i);
  const auto y = cyclic_shift(x, 3, -2);
  std::set<double> seen(y.values().begin(), y.values().end());
  EXPECT_EQ(seen.size(), 35u);
}

// Brute-force permission: two tokens of a shifted window may attend to each
// other iff, mapped back to unrolled padded coordinates, they fall in the same
// cell of the displaced window grid ([0, n), then every m from n) and both
// are real, or both are padding.
bool oracle_permitted(const WindowGrid& g, std::int64_t r1, std::int64_t c1, std::int64_t r2,
                      std::int64_t c2) {
  const auto n = g.shift, m = g.window;
  auto unroll = [](std::int64_t v, std::int64_t shift, std::int64_t extent) {
    return (v + shift) % extent;
  };
  auto bucket = [&](std::int64_t v) { return v < n ? 0 : 1 + (v - n) / m; };
  const auto a_r = unroll(r1, n, g.padded_height), a_c = unroll(c1, n, g.padded_width);
  const auto b_r = unroll(r2, n, g.padded_height), b_c = unroll(c2, n, g.padded_width);
  const bool a_real = a_r < g.height && a_c < g.width;
  const bool b_real = b_r < g.height && b_c < g.width;
  if (!a_real || !b_real) return !a_real && !b_real;
  if (n == 0) return true;
  return bucket(a_r) == bucket(b_r) && bucket(a_c) == bucket(b_c);
}

void expect_mask_matches_oracle(const WindowGrid& g, const ShiftMask& mask) {
  const auto m = g.window, T = m * m, wx = g.windows_x();
  ASSERT_EQ(static_cast<std::int64_t>(mask.window_pattern.size()), g.num_windows());
  for (std::int64_t w = 0; w < g.num_windows(); ++w) {
    const float* p = mask.for_window(w);
    for (std::int64_t i = 0; i < T; ++i) {
      for (std::int64_t j = 0; j < T; ++j) {
        const bool ok = oracle_permitted(g, (w / wx) * m + i / m, (w % wx) * m + i % m,
                                         (w / wx) * m + j / m, (w % wx) * m + j % m);
        ASSERT_EQ(p[i * T + j], ok ? 0.0f : kMaskedScore)
            << "m=" << m << " n=" << g.shift << " window " << w << " (" << i << "," << j << ")";
      }
    }
  }
}

TEST(ShiftMask, InteriorWindowsAreUnmasked) {
  const auto g = WindowGrid::make(12, 12, 3, 1);
  const auto mask = shift_attention_mask(g);
  for (std::int64_t w = 0; w < g.num_windows(); ++w) {
    if (w / g.windows_x() == g.windows_y() - 1 || w % g.windows_x() == g.windows_x() - 1) continue;
    const float* p = mask.for_window(w);
    EXPECT_TRUE(std::all_of(p, p + 81, [](float v) { return v == 0.0f; })) << "window " << w;
  }
}

TEST(ShiftMask, CornerWindowOfSixBySix) {
  const auto g = WindowGrid::make(6, 6, 3, 1);
  const auto mask = shift_attention_mask(g);
  const std::int64_t corner = g.num_windows() - 1;
  std::int64_t oracle_pairs = 0, mask_pairs = 0;
  std::set<std::pair<std::int64_t, std::int64_t>> blocks;
  for (std::int64_t i = 0; i < 9; ++i) {
    const auto r = 3 + i / 3, c = 3 + i % 3;
    blocks.insert({((r + 1) % 6 < 1 ? 0 : 1 + ((r + 1) % 6 - 1) / 3),
                   ((c + 1) % 6 < 1 ? 0 : 1 + ((c + 1) % 6 - 1) / 3)});
    for (std::int64_t j = 0; j < 9; ++j) {
      oracle_pairs += oracle_permitted(g, r, c, 3 + j / 3, 3 + j % 3);
      mask_pairs += mask.for_window(corner)[i * 9 + j] == 0.0f;
    }
  }
  EXPECT_EQ(blocks.size(), 4u);
  EXPECT_EQ(mask_pairs, oracle_pairs);
  EXPECT_EQ(oracle_pairs, 4 * 4 + 2 * 2 + 2 * 2 + 1);
}

TEST(ShiftMask, MatchesOracleSymmetricZeroDiagonal) {
  for (const std::int64_t m : {2, 3, 5, 7, 12}) {
    for (const std::int64_t n : {m / 2, std::int64_t{1}}) {
      if (n == 0) continue;
      for (const auto& [h, w] : {std::pair<std::int64_t, std::int64_t>{2 * m, 2 * m},
                                {2 * m + 1, 3 * m - 1}, {m, m + 2}, {16, 13}}) {
        const auto g = WindowGrid::make(h, w, m, n);
        const auto mask = shift_attention_mask(g);
        expect_mask_matches_oracle(g, mask);
        const auto T = mask.tokens;
        for (std::int64_t p = 0; p < mask.num_patterns(); ++p) {
          const float* a = mask.pattern(p);
          for (std::int64_t i = 0; i < T; ++i) {
            EXPECT_EQ(a[i * T + i], 0.0f);
            for (std::int64_t j = 0; j < i; ++j) ASSERT_EQ(a[i * T + j], a[j * T + i]);
          }
        }
      }
    }
  }
}

TEST(ShiftMask, PaddingOnlyMaskForPlainWindows) {
  EXPECT_FALSE(window_attention_mask(WindowGrid::make(6, 6, 3)).has_value());
  const auto g = WindowGrid::make(5, 7, 3);
  const auto mask = window_attention_mask(g);
  ASSERT_TRUE(mask.has_value());
  expect_mask_matches_oracle(g, *mask);
}

TEST(ShiftMask, ZeroShiftIsConfigError) {
  EXPECT_THROW(shift_attention_mask(WindowGrid::make(6, 6, 3, 0)), ConfigError);
}

TEST(RelativePositionIndex, SingleToken) {
  EXPECT_EQ(relative_position_index(1), std::vector<std::int32_t>{0});
}

TEST(RelativePositionIndex, DiagonalIsZeroOffset) {
  for (std::int64_t m : {2, 3, 5, 7}) {
    const auto idx = relative_position_index(m);
    const auto T = m * m;
    for (std::int64_t i = 0; i < T; ++i) EXPECT_EQ(idx[i * T + i], (m - 1) * (2 * m - 1) + (m - 1));
  }
}

TEST(RelativePositionIndex, TwoByTwoDoubleLoop) {
  const auto idx = relative_position_index(2);
  std::vector<std::int32_t> expected;
  for (int yi = 0; yi < 2; ++yi)
    for (int xi = 0; xi < 2; ++xi)
      for (int yj = 0; yj < 2; ++yj)
        for (int xj = 0; xj < 2; ++xj) expected.push_back((yi - yj + 1) * 3 + (xi - xj + 1));
  EXPECT_EQ(idx, expected);
}

TEST(RelativePositionIndex, RangeAndReflection) {
  for (std::int64_t m : {2, 3, 5, 7, 12}) {
    const auto idx = relative_position_index(m);
    const auto T = m * m, rows = (2 * m - 1) * (2 * m - 1);
    const auto center = 2 * ((m - 1) * (2 * m - 1) + (m - 1));
    for (std::int64_t i = 0; i < T; ++i) {
      for (std::int64_t j = 0; j < T; ++j) {
        ASSERT_GE(idx[i * T + j], 0);
        ASSERT_LT(idx[i * T + j], rows);
        ASSERT_EQ(idx[i * T + j] + idx[j * T + i], center);
      }
    }
  }
}

}  // namespace
}  // namespace mswin
