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
#include <string>

#include "mswin/params.hpp"
#include "mswin/tensor.hpp"
#include "mswin/window.hpp"

namespace mswin {

// Projections and relative position bias of one windowed multi-head
// self-attention module. `w_q`/`b_q` are undefined for the cross variant, whose
// queries are the input tokens themselves.
template <class Real>
struct AttentionParams {
  std::int64_t embed = 0;
  std::int64_t heads = 0;
  std::int64_t window = 0;
  std::int64_t shift = 0;
  Tensor<Real> w_q, b_q;
  Tensor<Real> w_k, b_k;
  Tensor<Real> w_v, b_v;
  Tensor<Real> w_o, b_o;
  Tensor<Real> bias_table;  // [(2m - 1)^2, heads]

  std::int64_t head_dim() const { return embed / heads; }
  bool has_query_projection() const { return w_q.defined(); }

  // Truncated-normal projections, zero biases and zero bias table.
  static AttentionParams init(std::int64_t embed, std::int64_t heads, std::int64_t window,
                              std::int64_t shift, Rng& rng, bool query_projection = true);

  void collect(const std::string& prefix, ParamList<Real>& out) const;
};

/// Core of windowed attention on already projected tokens. q, k, v:
/// [B, T, heads * d] with B = images * windows. Per head:
/// softmax(q k^T / sqrt(d) + bias[index] + mask) v. The mask, when given, is
/// looked up for window (b mod windows). Throws NumericError on non-finite scores.
template <class Real>
Tensor<Real> window_attention(const Tensor<Real>& q, const Tensor<Real>& k, const Tensor<Real>& v,
                              const Tensor<Real>& bias_table, std::int64_t window,
                              std::int64_t heads, const ShiftMask* mask);

/// Attention probabilities [B, heads, T, T] for inspection; not recorded.
template <class Real>
Tensor<Real> attention_weights(const Tensor<Real>& q, const Tensor<Real>& k,
                               const Tensor<Real>& bias_table, std::int64_t window,
                               std::int64_t heads, const ShiftMask* mask);

/// Projects windowed tokens to queries/keys/values, attends, concatenates the
/// heads and applies the output projection. `query_tokens` and `kv_tokens` are
/// [B, m^2, embed].
template <class Real>
Tensor<Real> attend(const Tensor<Real>& query_tokens, const Tensor<Real>& kv_tokens,
                    const AttentionParams<Real>& params, const ShiftMask* mask);

/// Plain windowed attention on [H, W, E] / [N, H, W, E]. Requires shift 0.
template <class Real>
Tensor<Real> w_msa(const Tensor<Real>& x, const AttentionParams<Real>& params);

/// Shifted-window attention: pad, roll by (n, n), partition, masked attend,
/// reverse, roll back, crop. Requires 0 < n < m.
template <class Real>
Tensor<Real> sw_msa(const Tensor<Real>& x, const AttentionParams<Real>& params);

/// Windowed attention with the learned query projection removed (Q = input);
/// keys and values are projected. Accepts any 0 <= n < m.
template <class Real>
Tensor<Real> cross_sw_msa(const Tensor<Real>& x, const AttentionParams<Real>& params);

/// Dispatches on params.shift: w_msa for 0, sw_msa otherwise.
template <class Real>
Tensor<Real> windowed_self_attention(const Tensor<Real>& x, const AttentionParams<Real>& params);

}  // namespace mswin
