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

#include <cmath>
#include <numeric>

#include "mswin/attention.hpp"
#include "mswin/error.hpp"
#include "mswin/grad_check.hpp"
#include "mswin/ops.hpp"
#include "mswin/reference.hpp"
#include "test_util.hpp"

namespace mswin {
namespace {

using testing::random_attention;
using testing::random_tensor;

// Dense evaluation of one window: tokens [T, E] in row-major window order.
std::vector<double> dense_window(const std::vector<double>& x, std::int64_t T,
                                 const AttentionParams<double>& p) {
  const auto E = p.embed, H = p.heads, d = p.head_dim(), m = p.window;
  auto project = [&](const Tensor<double>& w, const Tensor<double>& b) {
    std::vector<double> out(T * E);
    for (std::int64_t t = 0; t < T; ++t)
      for (std::int64_t j = 0; j < E; ++j) {
        double s = b.values()[j];
        for (std::int64_t i = 0; i < E; ++i) s += x[t * E + i] * w.values()[i * E + j];
        out[t * E + j] = s;
      }
    return out;
  };
  const auto q = p.has_query_projection() ? project(p.w_q, p.b_q) : x;
  const auto k = project(p.w_k, p.b_k), v = project(p.w_v, p.b_v);
  std::vector<double> heads(T * E, 0.0);
  for (std::int64_t h = 0; h < H; ++h) {
    for (std::int64_t i = 0; i < T; ++i) {
      std::vector<double> s(T);
      for (std::int64_t j = 0; j < T; ++j) {
        double dot = 0;
        for (std::int64_t c = 0; c < d; ++c) dot += q[i * E + h * d + c] * k[j * E + h * d + c];
        const auto row = (i / m - j / m + m - 1) * (2 * m - 1) + (i % m - j % m + m - 1);
        s[j] = dot / std::sqrt(static_cast<double>(d)) + p.bias_table.values()[row * H + h];
      }
      const double mx = *std::max_element(s.begin(), s.end());
      double z = 0;
      for (auto& e : s) z += (e = std::exp(e - mx));
      for (std::int64_t j = 0; j < T; ++j)
        for (std::int64_t c = 0; c < d; ++c) heads[i * E + h * d + c] += s[j] / z * v[j * E + h * d + c];
    }
  }
  std::vector<double> out(T * E);
  for (std::int64_t t = 0; t < T; ++t)
    for (std::int64_t j = 0; j < E; ++j) {
      double s = p.b_o.values()[j];
      for (std::int64_t i = 0; i < E; ++i) s += heads[t * E + i] * p.w_o.values()[i * E + j];
      out[t * E + j] = s;
    }
  return out;
}

TEST(AttentionParams, EmbedMustDivideByHeads) {
  Rng rng(0);
  EXPECT_THROW(AttentionParams<float>::init(10, 3, 2, 0, rng), ConfigError);
  const auto p = AttentionParams<float>::init(12, 3, 5, 2, rng);
  EXPECT_EQ(p.bias_table.shape(), (Shape{81, 3}));
  EXPECT_EQ(p.head_dim(), 4);
}

TEST(Attend, SingleTokenIgnoresQueriesAndKeys) {
  Rng rng(1);
  for (bool cross : {false, true}) {
    const auto p = random_attention(6, 2, 1, 0, rng, !cross);
    const auto x = random_tensor({3, 4, 6}, rng);
    const auto y = cross ? cross_sw_msa(x, p) : w_msa(x, p);
    const auto vx = linear(x, p.w_v, p.b_v);
    const auto expected = linear(vx, p.w_o, p.b_o);
    EXPECT_LT(testing::max_abs_diff(y, expected), 1e-12);
  }
}

TEST(Attend, IdenticalKeysGiveUniformWeights) {
  Rng rng(2);
  const auto q = random_tensor({2, 9, 4}, rng);
  Tensor<double> k({2, 9, 4});
  for (std::int64_t b = 0; b < 2; ++b)
    for (std::int64_t t = 0; t < 9; ++t)
      for (std::int64_t c = 0; c < 4; ++c) k.values()[(b * 9 + t) * 4 + c] = 0.3 * (c + 1) - b;
  const auto w = attention_weights(q, k, Tensor<double>({25, 2}), 3, 2, nullptr);
  ASSERT_EQ(w.shape(), (Shape{2, 2, 9, 9}));
  for (double v : w.values()) EXPECT_NEAR(v, 1.0 / 9.0, 1e-15);
}

TEST(Attend, MatchesDenseOracleOnOneWindow) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Rng rng(seed);
    for (std::int64_t heads : {1, 2}) {
      const auto p = random_attention(4, heads, 2, 0, rng);
      const auto x = random_tensor({1, 4, 4}, rng);
      const auto y = attend(x, x, p, nullptr);
      const auto expected = dense_window({x.values().begin(), x.values().end()}, 4, p);
      for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(y.values()[i], expected[i], 1e-6);
    }
  }
}

TEST(Attend, NonFiniteScoresAreNumericError) {
  Rng rng(3);
  auto q = random_tensor({1, 4, 2}, rng);
  q.values()[0] = std::numeric_limits<double>::infinity();
  const auto k = random_tensor({1, 4, 2}, rng);
  EXPECT_THROW(window_attention(q, k, k, Tensor<double>({9, 1}), 2, 1, nullptr), NumericError);
}

TEST(Attend, KeyTranslationInvarianceWithZeroBias) {
  Rng rng(4);
  const auto q = random_tensor({3, 9, 4}, rng), k = random_tensor({3, 9, 4}, rng);
  const auto v = random_tensor({3, 9, 4}, rng), c = random_tensor({4}, rng);
  auto shifted = k.clone();
  for (std::int64_t i = 0; i < shifted.numel(); ++i) shifted.values()[i] += c.values()[i % 4];
  const Tensor<double> bias({25, 2});
  EXPECT_LT(testing::max_abs_diff(window_attention(q, shifted, v, bias, 3, 2, nullptr),
                                  window_attention(q, k, v, bias, 3, 2, nullptr)),
            1e-5);
}

TEST(Attend, MaskedRowsSumToOne) {
  Rng rng(5);
  const auto grid = WindowGrid::make(7, 7, 3, 1);
  const auto mask = shift_attention_mask(grid);
  const auto nw = grid.num_windows();
  const auto q = random_tensor({nw, 9, 4}, rng), k = random_tensor({nw, 9, 4}, rng);
  const auto w = attention_weights(q, k, random_tensor({25, 2}, rng), 3, 2, &mask);
  for (std::int64_t b = 0; b < nw; ++b) {
    const float* pattern = mask.for_window(b);
    for (std::int64_t h = 0; h < 2; ++h) {
      for (std::int64_t i = 0; i < 9; ++i) {
        double s = 0;
        for (std::int64_t j = 0; j < 9; ++j) {
          const double a = w.values()[((b * 2 + h) * 9 + i) * 9 + j];
          s += a;
          if (pattern[i * 9 + j] != 0.0f) {
            EXPECT_LT(a, 1e-30);
          }
        }
        EXPECT_NEAR(s, 1.0, 1e-6);
      }
    }
  }
}

TEST(WMsa, OneWindowEqualsSingleAttend) {
  Rng rng(6);
  const auto p = random_attention(6, 3, 3, 0, rng);
  const auto x = random_tensor({3, 3, 6}, rng);
  const auto y = w_msa(x, p);
  const auto direct = attend(reshape(x, {1, 9, 6}), reshape(x, {1, 9, 6}), p, nullptr);
  EXPECT_LT(testing::max_abs_diff(reshape(y, {1, 9, 6}), direct), 1e-14);
}

TEST(WMsa, PreservesShape) {
  Rng rng(7);
  const auto p = random_attention(8, 2, 3, 0, rng);
  EXPECT_EQ(w_msa(random_tensor({6, 6, 8}, rng), p).shape(), (Shape{6, 6, 8}));
  EXPECT_EQ(w_msa(random_tensor({2, 5, 7, 8}, rng), p).shape(), (Shape{2, 5, 7, 8}));
}

TEST(WMsa, PermutationEquivariantWithZeroBias) {
  Rng rng(8);
  auto p = random_attention(4, 2, 3, 0, rng);
  for (auto& v : p.bias_table.values()) v = 0;
  const auto x = random_tensor({3, 3, 4}, rng);
  std::vector<int> perm(9);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Tensor<double> permuted({3, 3, 4});
  for (int t = 0; t < 9; ++t)
    for (int c = 0; c < 4; ++c) permuted.values()[perm[t] * 4 + c] = x.values()[t * 4 + c];
  const auto y = w_msa(x, p), yp = w_msa(permuted, p);
  for (int t = 0; t < 9; ++t)
    for (int c = 0; c < 4; ++c) EXPECT_NEAR(yp.values()[perm[t] * 4 + c], y.values()[t * 4 + c], 1e-12);
}

TEST(WMsa, RejectsShiftedParameters) {
  Rng rng(9);
  const auto p = random_attention(4, 1, 3, 1, rng);
  EXPECT_THROW(w_msa(random_tensor({6, 6, 4}, rng), p), ConfigError);
}

TEST(SwMsa, RejectsZeroShift) {
  Rng rng(10);
  const auto p = random_attention(4, 1, 3, 0, rng);
  EXPECT_THROW(sw_msa(random_tensor({6, 6, 4}, rng), p), ConfigError);
  EXPECT_EQ(windowed_self_attention(random_tensor({6, 6, 4}, rng), p).shape(), (Shape{6, 6, 4}));
}

TEST(SwMsa, MatchesShiftedPartitionReference) {
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    for (const std::int64_t m : {2, 3}) {
      for (const std::int64_t hw : {4, 6}) {
        Rng rng(seed);
        const auto p = random_attention(4, 2, m, 1, rng);
        const auto x = random_tensor({hw, hw, 4}, rng);
        worst = std::max(worst, testing::max_abs_diff(sw_msa(x, p), reference_window_attention(x, p)));
      }
    }
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(SwMsa, PaddedAndLargerShiftsMatchReference) {
  Rng rng(11);
  for (const auto& [m, n, h, w] : std::vector<std::array<std::int64_t, 4>>{
           {3, 1, 5, 7}, {5, 2, 9, 6}, {4, 2, 7, 7}, {7, 3, 10, 12}}) {
    const auto p = random_attention(6, 3, m, n, rng);
    const auto x = random_tensor({h, w, 6}, rng);
    EXPECT_LT(testing::max_abs_diff(sw_msa(x, p), reference_window_attention(x, p)), 1e-10)
        << m << " " << n << " " << h << "x" << w;
  }
}

// The reference at n = 0 cuts ordinary windows; check it against the dense
// per-window evaluation so that it is not only compared with the fast path.
TEST(Reference, PlainWindowsMatchDenseOracle) {
  Rng rng(12);
  const auto p = random_attention(4, 2, 2, 0, rng);
  const auto x = random_tensor({4, 4, 4}, rng);
  const auto ref = reference_window_attention(x, p);
  for (int wy = 0; wy < 2; ++wy) {
    for (int wx = 0; wx < 2; ++wx) {
      std::vector<double> tokens;
      for (int t = 0; t < 4; ++t) {
        const int r = wy * 2 + t / 2, c = wx * 2 + t % 2;
        for (int ch = 0; ch < 4; ++ch) tokens.push_back(x.values()[(r * 4 + c) * 4 + ch]);
      }
      const auto out = dense_window(tokens, 4, p);
      for (int t = 0; t < 4; ++t) {
        const int r = wy * 2 + t / 2, c = wx * 2 + t % 2;
        for (int ch = 0; ch < 4; ++ch) EXPECT_NEAR(ref.values()[(r * 4 + c) * 4 + ch], out[t * 4 + ch], 1e-12);
      }
    }
  }
}

TEST(SwMsa, ConstantFieldStaysConstant) {
  Rng rng(13);
  auto p = random_attention(4, 2, 3, 1, rng);
  for (auto& v : p.bias_table.values()) v = 0;
  const Tensor<double> x({7, 8, 4}, 0.6);
  const auto y = sw_msa(x, p);
  for (std::int64_t i = 0; i < y.numel(); ++i) EXPECT_NEAR(y.values()[i], y.values()[i % 4], 1e-12);
}

TEST(CrossSwMsa, IdentityQueryProjectionMatchesSwMsa) {
  Rng rng(14);
  auto self = random_attention(4, 2, 3, 1, rng);
  Tensor<double> eye({4, 4});
  for (int i = 0; i < 4; ++i) eye.values()[i * 5] = 1;
  self.w_q = eye;
  self.b_q = Tensor<double>({4});
  auto cross = self;
  cross.w_q = Tensor<double>();
  cross.b_q = Tensor<double>();
  const auto x = random_tensor({6, 6, 4}, rng);
  EXPECT_TRUE(testing::bit_equal(cross_sw_msa(x, cross), sw_msa(x, self)));
  EXPECT_THROW(cross_sw_msa(x, self), ConfigError);
}

TEST(CrossSwMsa, AcceptsUnshiftedAndMatchesReference) {
  Rng rng(15);
  for (std::int64_t n : {0, 1, 2}) {
    const auto p = random_attention(4, 2, 4, n, rng, false);
    const auto x = random_tensor({6, 5, 4}, rng);
    EXPECT_LT(testing::max_abs_diff(cross_sw_msa(x, p), reference_window_attention(x, p)), 1e-10);
  }
}

TEST(AttentionFlops, ScaleLinearlyWithArea) {
  Rng rng(16);
  const auto p = random_attention(8, 2, 3, 0, rng);
  auto count = [&](std::int64_t h, std::int64_t w) {
    FlopCounter counter;
    (void)w_msa(Tensor<double>({h, w, 8}, 0.5), p);
    return counter.total();
  };
  EXPECT_EQ(count(12, 6), 2 * count(6, 6));
  EXPECT_EQ(count(12, 12), 4 * count(6, 6));
}

class AttentionGradients : public ::testing::TestWithParam<int> {};

TEST_P(AttentionGradients, MatchCentralDifferences) {
  Rng rng(200 + GetParam());
  GradCheckOptions composite;
  composite.tolerance = 1e-3;
  GradCheckOptions primitive;
  auto expect_pass = [](const char* name, const GradCheckReport& r) {
    EXPECT_TRUE(r.passed) << name << ": " << r.max_relative_error << " " << r.worst_entry << " "
                          << r.diagnostic;
  };
  {
    const auto grid = WindowGrid::make(5, 4, 3, 1);
    const auto mask = shift_attention_mask(grid);
    auto q = random_tensor({grid.num_windows(), 9, 4}, rng), k = random_tensor(q.shape(), rng);
    auto v = random_tensor(q.shape(), rng), bias = random_tensor({25, 2}, rng, 0.3);
    auto wt = random_tensor(q.shape(), rng);
    std::vector<Tensor<double>> wrt{q, k, v, bias};
    expect_pass("window_attention", grad_check([&] {
                  return testing::weighted_sum(window_attention(q, k, v, bias, 3, 2, &mask), wt);
                }, wrt, primitive));
  }
  struct Case {
    const char* name;
    std::int64_t shift;
    bool cross;
  };
  for (const Case c : {Case{"w_msa", 0, false}, Case{"sw_msa", 1, false}, Case{"cross_sw_msa", 1, true}}) {
    const auto p = random_attention(4, 2, 3, c.shift, rng, !c.cross);
    ParamList<double> params;
    p.collect("attn", params);
    auto wrt = testing::trainable(params);
    auto x = random_tensor({5, 5, 4}, rng), wt = random_tensor({5, 5, 4}, rng);
    wrt.push_back(x);
    expect_pass(c.name, grad_check([&] {
                  const auto y = c.cross ? cross_sw_msa(x, p) : windowed_self_attention(x, p);
                  return testing::weighted_sum(y, wt);
                }, wrt, composite));
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, AttentionGradients, ::testing::Range(0, 5));

}  // namespace
}  // namespace mswin
