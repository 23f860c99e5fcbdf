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
#include <span>
#include <vector>

#include "mswin/tensor.hpp"

namespace mswin {

// Differentiable primitives. Spatial tensors are laid out [H, W, C] or
// [N, H, W, C]; ops accepting both return the rank they were given. Every op
// records a backward rule on the active tape when any input requires grad.

inline constexpr std::uint8_t kIgnoreLabel = 255;

/// y[..., j] = sum_i x[..., i] * weight[i, j] + bias[j]. `bias` may be undefined.
template <class Real>
Tensor<Real> linear(const Tensor<Real>& x, const Tensor<Real>& weight, const Tensor<Real>& bias);

template <class Real>
Tensor<Real> add(const Tensor<Real>& a, const Tensor<Real>& b);

/// Sum of equally shaped tensors, accumulated left to right.
template <class Real>
Tensor<Real> add_n(std::span<const Tensor<Real>> terms);

template <class Real>
Tensor<Real> mul(const Tensor<Real>& a, const Tensor<Real>& b);

template <class Real>
Tensor<Real> scale(const Tensor<Real>& x, Real factor);

template <class Real>
Tensor<Real> relu(const Tensor<Real>& x);

/// Exact (erf) GELU.
template <class Real>
Tensor<Real> gelu(const Tensor<Real>& x);

/// Numerically stable softmax along `axis` (negative counts from the back).
template <class Real>
Tensor<Real> softmax(const Tensor<Real>& x, int axis = -1);

inline constexpr double kLayerNormEps = 1e-5;

/// Normalizes over the last axis, then applies gamma/beta.
template <class Real>
Tensor<Real> layer_norm(const Tensor<Real>& x, const Tensor<Real>& gamma, const Tensor<Real>& beta,
                        double eps = kLayerNormEps);

template <class Real>
struct BatchNormStats {
  Tensor<Real> running_mean;
  Tensor<Real> running_var;
  double momentum = 0.1;
  double eps = 1e-5;
};

/// Batch norm over every position (all axes but the last). In training mode
/// batch statistics are used and the running estimates updated in place; in
/// eval mode the running estimates are used and left untouched.
template <class Real>
Tensor<Real> batch_norm(const Tensor<Real>& x, const Tensor<Real>& gamma,
                        const Tensor<Real>& beta, BatchNormStats<Real>& stats, bool training);

/// Bilinear resize with half-pixel centers: source = (i + 0.5) * in / out - 0.5,
/// clamped to [0, in - 1].
template <class Real>
Tensor<Real> bilinear_resize(const Tensor<Real>& x, std::int64_t out_h, std::int64_t out_w);

enum class PadMode { kZero, kReplicate };

/// Pads the spatial axes on the bottom and right.
template <class Real>
Tensor<Real> pad2d(const Tensor<Real>& x, std::int64_t bottom, std::int64_t right,
                   PadMode mode = PadMode::kZero);

/// Keeps the top-left `h` x `w` region.
template <class Real>
Tensor<Real> crop2d(const Tensor<Real>& x, std::int64_t h, std::int64_t w);

/// Mirrors the width axis.
template <class Real>
Tensor<Real> flip_horizontal(const Tensor<Real>& x);

/// Concatenation along the last axis.
template <class Real>
Tensor<Real> concat_channels(std::span<const Tensor<Real>> parts);

template <class Real>
Tensor<Real> reshape(const Tensor<Real>& x, Shape shape);

/// [N, H, W, C] -> [N, H/p, W/p, p*p*C]; each patch flattened as (row, col, channel).
template <class Real>
Tensor<Real> patchify(const Tensor<Real>& x, std::int64_t patch);

/// [N, H, W, C] -> [N, H/2, W/2, 4C] with neighbours ordered
/// (0,0), (1,0), (0,1), (1,1) as (row offset, col offset). H and W must be even.
template <class Real>
Tensor<Real> merge_neighbors(const Tensor<Real>& x);

/// Mean cross-entropy over positions whose label is not kIgnoreLabel.
/// logits: [..., K]; labels: one entry per position. No valid position gives 0.
template <class Real>
Tensor<Real> cross_entropy(const Tensor<Real>& logits, std::span<const std::uint8_t> labels);

/// Sum of all elements as a rank-0 tensor.
template <class Real>
Tensor<Real> sum(const Tensor<Real>& x);

/// Throws NumericError if any element of `x` is NaN or infinite.
template <class Real>
void ensure_finite(const Tensor<Real>& x, const char* what);

}  // namespace mswin
