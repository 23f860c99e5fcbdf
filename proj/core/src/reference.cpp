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

#include "mswin/reference.hpp"

#include <cmath>
#include <vector>

#include "mswin/error.hpp"

namespace mswin {
namespace {

std::int64_t bucket(std::int64_t i, std::int64_t m, std::int64_t n) {
  return i < n ? 0 : 1 + (i - n) / m;
}

// y = x W + b for one token.
template <class Real>
std::vector<double> project(const Real* x, const Tensor<Real>& w, const Tensor<Real>& b,
                            std::int64_t E) {
  std::vector<double> y(static_cast<std::size_t>(E), 0.0);
  auto wv = w.values();
  for (std::int64_t o = 0; o < E; ++o) {
    double acc = b.defined() ? static_cast<double>(b.values()[o]) : 0.0;
    for (std::int64_t i = 0; i < E; ++i) acc += static_cast<double>(x[i]) * wv[i * E + o];
    y[o] = acc;
  }
  return y;
}

}  // namespace

template <class Real>
Tensor<Real> reference_window_attention(const Tensor<Real>& x,
                                        const AttentionParams<Real>& params) {
  if (x.rank() != 3 || x.dim(2) != params.embed) {
    throw DimensionError("reference attention: expected [H, W, " + std::to_string(params.embed) +
                         "], got " + shape_string(x.shape()));
  }
  const auto H = x.dim(0), W = x.dim(1), E = x.dim(2);
  const auto m = params.window, n = params.shift, heads = params.heads;
  const auto d = E / heads;
  const auto span = 2 * m - 1;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  auto xv = x.values();
  auto table = params.bias_table.values();

  const auto tokens = H * W;
  std::vector<std::vector<double>> q(tokens), k(tokens), v(tokens);
  for (std::int64_t t = 0; t < tokens; ++t) {
    const Real* row = xv.data() + t * E;
    if (params.has_query_projection()) {
      q[t] = project(row, params.w_q, params.b_q, E);
    } else {
      q[t].assign(row, row + E);
    }
    k[t] = project(row, params.w_k, params.b_k, E);
    v[t] = project(row, params.w_v, params.b_v, E);
  }

  Tensor<Real> out({H, W, E});
  auto ov = out.values();
  std::vector<double> mixed(static_cast<std::size_t>(E));
  for (std::int64_t yi = 0; yi < H; ++yi) {
    for (std::int64_t xi = 0; xi < W; ++xi) {
      const auto i = yi * W + xi;
      std::vector<std::int64_t> keys;
      for (std::int64_t yj = 0; yj < H; ++yj) {
        for (std::int64_t xj = 0; xj < W; ++xj) {
          if (bucket(yj, m, n) == bucket(yi, m, n) && bucket(xj, m, n) == bucket(xi, m, n)) {
            keys.push_back(yj * W + xj);
          }
        }
      }
      for (std::int64_t h = 0; h < heads; ++h) {
        std::vector<double> score(keys.size());
        double mx = -INFINITY;
        for (std::size_t a = 0; a < keys.size(); ++a) {
          const auto j = keys[a];
          double dot = 0;
          for (std::int64_t c = h * d; c < (h + 1) * d; ++c) dot += q[i][c] * k[j][c];
          const auto dy = yi - j / W, dx = xi - j % W;
          const auto row = (dy + m - 1) * span + (dx + m - 1);
          score[a] = dot * inv_sqrt_d + static_cast<double>(table[row * heads + h]);
          mx = std::max(mx, score[a]);
        }
        double z = 0;
        for (auto& s : score) z += (s = std::exp(s - mx));
        for (std::int64_t c = h * d; c < (h + 1) * d; ++c) {
          double acc = 0;
          for (std::size_t a = 0; a < keys.size(); ++a) acc += score[a] / z * v[keys[a]][c];
          mixed[c] = acc;
        }
      }
      std::vector<Real> mixed_real(mixed.begin(), mixed.end());
      const auto y = project(mixed_real.data(), params.w_o, params.b_o, E);
      for (std::int64_t c = 0; c < E; ++c) ov[i * E + c] = static_cast<Real>(y[c]);
    }
  }
  return out;
}

template Tensor<float> reference_window_attention(const Tensor<float>&,
                                                  const AttentionParams<float>&);
template Tensor<double> reference_window_attention(const Tensor<double>&,
                                                   const AttentionParams<double>&);

}  // namespace mswin
