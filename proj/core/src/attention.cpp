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

#include "mswin/attention.hpp"

#include <cmath>
#include <limits>

#include "autograd.hpp"
#include "mswin/ops.hpp"

namespace mswin {

template <class Real>
AttentionParams<Real> AttentionParams<Real>::init(std::int64_t embed, std::int64_t heads,
                                                  std::int64_t window, std::int64_t shift,
                                                  Rng& rng, bool query_projection) {
  if (heads <= 0 || embed % heads != 0) {
    throw ConfigError("embed dim " + std::to_string(embed) + " not divisible by " +
                      std::to_string(heads) + " heads");
  }
  WindowGrid::make(window, window, window, shift);  // validates m and n
  AttentionParams p;
  p.embed = embed;
  p.heads = heads;
  p.window = window;
  p.shift = shift;
  if (query_projection) {
    p.w_q = make_param(trunc_normal<Real>({embed, embed}, rng));
    p.b_q = make_param(Tensor<Real>({embed}));
  }
  p.w_k = make_param(trunc_normal<Real>({embed, embed}, rng));
  p.b_k = make_param(Tensor<Real>({embed}));
  p.w_v = make_param(trunc_normal<Real>({embed, embed}, rng));
  p.b_v = make_param(Tensor<Real>({embed}));
  p.w_o = make_param(trunc_normal<Real>({embed, embed}, rng));
  p.b_o = make_param(Tensor<Real>({embed}));
  const auto span = 2 * window - 1;
  p.bias_table = make_param(Tensor<Real>({span * span, heads}));
  return p;
}

template <class Real>
void AttentionParams<Real>::collect(const std::string& prefix, ParamList<Real>& out) const {
  if (w_q.defined()) {
    out.push_back({join_name(prefix, "w_q"), w_q});
    out.push_back({join_name(prefix, "b_q"), b_q});
  }
  out.push_back({join_name(prefix, "w_k"), w_k});
  out.push_back({join_name(prefix, "b_k"), b_k});
  out.push_back({join_name(prefix, "w_v"), w_v});
  out.push_back({join_name(prefix, "b_v"), b_v});
  out.push_back({join_name(prefix, "w_o"), w_o});
  out.push_back({join_name(prefix, "b_o"), b_o});
  out.push_back({join_name(prefix, "bias_table"), bias_table});
}

namespace {

template <class Real>
using StridedMap = Eigen::Map<const detail::RowMatrix<Real>, 0, Eigen::OuterStride<>>;
template <class Real>
using MutableStridedMap = Eigen::Map<detail::RowMatrix<Real>, 0, Eigen::OuterStride<>>;

struct CoreShape {
  std::int64_t batch, tokens, embed, heads, head_dim, windows_per_image;
};

template <class Real>
CoreShape check_core(const Tensor<Real>& q, const Tensor<Real>& k, const Tensor<Real>& bias_table,
                     std::int64_t window, std::int64_t heads, const ShiftMask* mask) {
  if (q.rank() != 3 || q.shape() != k.shape()) {
    throw DimensionError("window_attention: q/k must share a [B, T, E] shape, got " +
                         shape_string(q.shape()) + " and " + shape_string(k.shape()));
  }
  CoreShape s{q.dim(0), q.dim(1), q.dim(2), heads, 0, 1};
  if (s.tokens != window * window) {
    throw DimensionError("window_attention: " + std::to_string(s.tokens) +
                         " tokens per window for window size " + std::to_string(window));
  }
  if (heads <= 0 || s.embed % heads != 0) {
    throw DimensionError("window_attention: embed not divisible by heads");
  }
  s.head_dim = s.embed / heads;
  const auto span = 2 * window - 1;
  if (bias_table.rank() != 2 || bias_table.dim(0) != span * span || bias_table.dim(1) != heads) {
    throw DimensionError("window_attention: bias table " + shape_string(bias_table.shape()) +
                         " for window " + std::to_string(window));
  }
  if (mask != nullptr) {
    if (mask->tokens != s.tokens) throw DimensionError("window_attention: mask/window mismatch");
    s.windows_per_image = static_cast<std::int64_t>(mask->window_pattern.size());
    if (s.batch % s.windows_per_image != 0) {
      throw DimensionError("window_attention: batch is not a multiple of the mask's windows");
    }
  }
  return s;
}

// Fills probs [B, heads, T, T].
template <class Real>
void attention_probabilities(const Tensor<Real>& q, const Tensor<Real>& k,
                             const Tensor<Real>& bias_table, const ShiftMask* mask,
                             const std::vector<std::int32_t>& index, const CoreShape& s,
                             Real scale_factor, std::vector<Real>& probs) {
  const auto T = s.tokens, E = s.embed, d = s.head_dim, H = s.heads;
  probs.assign(static_cast<std::size_t>(s.batch * H * T * T), Real(0));
  auto table = bias_table.values();
  for (std::int64_t b = 0; b < s.batch; ++b) {
    const float* m = mask ? mask->for_window(b % s.windows_per_image) : nullptr;
    for (std::int64_t h = 0; h < H; ++h) {
      StridedMap<Real> Q(q.values().data() + b * T * E + h * d, T, d, Eigen::OuterStride<>(E));
      StridedMap<Real> K(k.values().data() + b * T * E + h * d, T, d, Eigen::OuterStride<>(E));
      Real* P = probs.data() + (b * H + h) * T * T;
      detail::MatrixMap<Real> S(P, T, T);
      S.noalias() = (Q * K.transpose()) * scale_factor;
      for (std::int64_t i = 0; i < T; ++i) {
        Real* row = P + i * T;
        for (std::int64_t j = 0; j < T; ++j) {
          row[j] += table[index[i * T + j] * H + h];
          if (m != nullptr) row[j] += static_cast<Real>(m[i * T + j]);
        }
        Real mx = row[0];
        for (std::int64_t j = 1; j < T; ++j) mx = std::max(mx, row[j]);
        if (!std::isfinite(mx)) throw NumericError("window_attention: non-finite attention score");
        Real total = 0;
        for (std::int64_t j = 0; j < T; ++j) {
          row[j] = std::exp(row[j] - mx);
          total += row[j];
        }
        const Real inv = Real(1) / total;
        for (std::int64_t j = 0; j < T; ++j) row[j] *= inv;
      }
    }
  }
}

}  // namespace

template <class Real>
Tensor<Real> window_attention(const Tensor<Real>& q, const Tensor<Real>& k, const Tensor<Real>& v,
                              const Tensor<Real>& bias_table, std::int64_t window,
                              std::int64_t heads, const ShiftMask* mask) {
  const auto s = check_core(q, k, bias_table, window, heads, mask);
  if (v.shape() != q.shape()) throw DimensionError("window_attention: value shape mismatch");
  const auto T = s.tokens, E = s.embed, d = s.head_dim, H = s.heads;
  const Real scale_factor = Real(1) / std::sqrt(static_cast<Real>(d));
  auto index = relative_position_index(window);
  std::vector<Real> probs;
  attention_probabilities(q, k, bias_table, mask, index, s, scale_factor, probs);

  Tensor<Real> out(q.shape());
  for (std::int64_t b = 0; b < s.batch; ++b) {
    for (std::int64_t h = 0; h < H; ++h) {
      detail::ConstMatrixMap<Real> P(probs.data() + (b * H + h) * T * T, T, T);
      StridedMap<Real> V(v.values().data() + b * T * E + h * d, T, d, Eigen::OuterStride<>(E));
      MutableStridedMap<Real> O(out.values().data() + b * T * E + h * d, T, d,
                                Eigen::OuterStride<>(E));
      O.noalias() = P * V;
    }
  }
  FlopCounter::add(4.0 * static_cast<double>(s.batch) * static_cast<double>(T * T) *
                   static_cast<double>(E));

  if (detail::wants_grad<Real>({&q, &k, &v, &bias_table})) {
    detail::record<Real>(
        OpKind::kWindowAttention, {q, k, v, bias_table}, out,
        [q, k, v, bias_table, out, s, scale_factor, probs = std::move(probs),
         index = std::move(index)]() mutable {
          const auto T = s.tokens, E = s.embed, d = s.head_dim, H = s.heads;
          auto gout = out.grad();
          Real* gq = q.requires_grad() ? q.grad().data() : nullptr;
          Real* gk = k.requires_grad() ? k.grad().data() : nullptr;
          Real* gv = v.requires_grad() ? v.grad().data() : nullptr;
          Real* gtable = bias_table.requires_grad() ? bias_table.grad().data() : nullptr;
          detail::RowMatrix<Real> dP(T, T);
          for (std::int64_t b = 0; b < s.batch; ++b) {
            for (std::int64_t h = 0; h < H; ++h) {
              const auto off = b * T * E + h * d;
              detail::ConstMatrixMap<Real> P(probs.data() + (b * H + h) * T * T, T, T);
              StridedMap<Real> dO(gout.data() + off, T, d, Eigen::OuterStride<>(E));
              StridedMap<Real> Q(q.values().data() + off, T, d, Eigen::OuterStride<>(E));
              StridedMap<Real> K(k.values().data() + off, T, d, Eigen::OuterStride<>(E));
              StridedMap<Real> V(v.values().data() + off, T, d, Eigen::OuterStride<>(E));
              if (gv != nullptr) {
                MutableStridedMap<Real> dV(gv + off, T, d, Eigen::OuterStride<>(E));
                dV.noalias() += P.transpose() * dO;
              }
              dP.noalias() = dO * V.transpose();
              // dS = P * (dP - rowsum(dP * P)), stored in dP.
              for (std::int64_t i = 0; i < T; ++i) {
                Real dot = 0;
                for (std::int64_t j = 0; j < T; ++j) dot += dP(i, j) * P(i, j);
                for (std::int64_t j = 0; j < T; ++j) dP(i, j) = P(i, j) * (dP(i, j) - dot);
              }
              if (gtable != nullptr) {
                for (std::int64_t i = 0; i < T; ++i) {
                  for (std::int64_t j = 0; j < T; ++j) gtable[index[i * T + j] * H + h] += dP(i, j);
                }
              }
              if (gq != nullptr) {
                MutableStridedMap<Real> dQ(gq + off, T, d, Eigen::OuterStride<>(E));
                dQ.noalias() += (dP * K) * scale_factor;
              }
              if (gk != nullptr) {
                MutableStridedMap<Real> dK(gk + off, T, d, Eigen::OuterStride<>(E));
                dK.noalias() += (dP.transpose() * Q) * scale_factor;
              }
            }
          }
        });
  }
  return out;
}

template <class Real>
Tensor<Real> attention_weights(const Tensor<Real>& q, const Tensor<Real>& k,
                               const Tensor<Real>& bias_table, std::int64_t window,
                               std::int64_t heads, const ShiftMask* mask) {
  const auto s = check_core(q, k, bias_table, window, heads, mask);
  const Real scale_factor = Real(1) / std::sqrt(static_cast<Real>(s.head_dim));
  std::vector<Real> probs;
  attention_probabilities(q, k, bias_table, mask, relative_position_index(window), s,
                          scale_factor, probs);
  return Tensor<Real>({s.batch, heads, s.tokens, s.tokens}, std::move(probs));
}

template <class Real>
Tensor<Real> attend(const Tensor<Real>& query_tokens, const Tensor<Real>& kv_tokens,
                    const AttentionParams<Real>& params, const ShiftMask* mask) {
  const auto q = params.has_query_projection()
                     ? linear(query_tokens, params.w_q, params.b_q)
                     : query_tokens;
  const auto k = linear(kv_tokens, params.w_k, params.b_k);
  const auto v = linear(kv_tokens, params.w_v, params.b_v);
  const auto heads_out =
      window_attention(q, k, v, params.bias_table, params.window, params.heads, mask);
  return linear(heads_out, params.w_o, params.b_o);
}

namespace {

template <class Real>
Tensor<Real> shifted_window_attention(const Tensor<Real>& x, const AttentionParams<Real>& params) {
  const auto s = detail::spatial_dims(x.shape(), "windowed attention");
  if (s.c != params.embed) {
    throw DimensionError("windowed attention: input width " + std::to_string(s.c) +
                         " != embed " + std::to_string(params.embed));
  }
  const auto grid = WindowGrid::make(s.h, s.w, params.window, params.shift);
  const auto n = grid.shift;
  auto padded = grid.padded() ? pad2d(x, grid.pad_bottom, grid.pad_right) : x;
  auto rolled = n > 0 ? cyclic_shift(padded, n, n) : padded;
  const auto tokens = window_partition(rolled, grid);
  const auto mask = window_attention_mask(grid);
  const auto attended = attend(tokens, tokens, params, mask ? &*mask : nullptr);
  auto merged = window_reverse(attended, grid, /*crop=*/false, /*batched=*/s.batched);
  auto unrolled = n > 0 ? cyclic_shift(merged, -n, -n) : merged;
  return grid.padded() ? crop2d(unrolled, s.h, s.w) : unrolled;
}

}  // namespace

template <class Real>
Tensor<Real> w_msa(const Tensor<Real>& x, const AttentionParams<Real>& params) {
  if (params.shift != 0) throw ConfigError("w_msa: shift must be 0 (use sw_msa)");
  if (!params.has_query_projection()) throw ConfigError("w_msa: missing query projection");
  return shifted_window_attention(x, params);
}

template <class Real>
Tensor<Real> sw_msa(const Tensor<Real>& x, const AttentionParams<Real>& params) {
  if (params.shift <= 0) {
    throw ConfigError("sw_msa: shift must be positive; n = 0 is plain w_msa");
  }
  if (!params.has_query_projection()) throw ConfigError("sw_msa: missing query projection");
  return shifted_window_attention(x, params);
}

template <class Real>
Tensor<Real> cross_sw_msa(const Tensor<Real>& x, const AttentionParams<Real>& params) {
  if (params.has_query_projection()) {
    throw ConfigError("cross_sw_msa: parameters carry a query projection");
  }
  return shifted_window_attention(x, params);
}

template <class Real>
Tensor<Real> windowed_self_attention(const Tensor<Real>& x, const AttentionParams<Real>& params) {
  return params.shift == 0 ? w_msa(x, params) : sw_msa(x, params);
}

#define MSWIN_INSTANTIATE_ATTENTION(Real)                                                       \
  template struct AttentionParams<Real>;                                                       \
  template Tensor<Real> window_attention(const Tensor<Real>&, const Tensor<Real>&,             \
                                         const Tensor<Real>&, const Tensor<Real>&,             \
                                         std::int64_t, std::int64_t, const ShiftMask*);        \
  template Tensor<Real> attention_weights(const Tensor<Real>&, const Tensor<Real>&,            \
                                          const Tensor<Real>&, std::int64_t, std::int64_t,     \
                                          const ShiftMask*);                                   \
  template Tensor<Real> attend(const Tensor<Real>&, const Tensor<Real>&,                       \
                               const AttentionParams<Real>&, const ShiftMask*);                \
  template Tensor<Real> w_msa(const Tensor<Real>&, const AttentionParams<Real>&);              \
  template Tensor<Real> sw_msa(const Tensor<Real>&, const AttentionParams<Real>&);             \
  template Tensor<Real> cross_sw_msa(const Tensor<Real>&, const AttentionParams<Real>&);       \
  template Tensor<Real> windowed_self_attention(const Tensor<Real>&, const AttentionParams<Real>&);

MSWIN_INSTANTIATE_ATTENTION(float)
MSWIN_INSTANTIATE_ATTENTION(double)

}  // namespace mswin
