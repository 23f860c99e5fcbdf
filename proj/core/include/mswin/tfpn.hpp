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

#include <array>
#include <cstdint>
#include <string>

#include "mswin/attention.hpp"
#include "mswin/backbone.hpp"
#include "mswin/ops.hpp"
#include "mswin/params.hpp"

namespace mswin {

// Per-position linear map to the fusion width, batch norm, ReLU.
template <class Real>
struct LateralParams {
  Tensor<Real> w, b;
  Tensor<Real> bn_g, bn_b;
  BatchNormStats<Real> stats;

  static LateralParams init(std::int64_t in_channels, std::int64_t out_channels, Rng& rng);
  void collect(const std::string& prefix, ParamList<Real>& out) const;
};

// Index k = 0..3 addresses the pyramid level of L_{k+1}: level 0 is the
// coarsest (stride 32), fed by stage 4; level 3 is the finest (stride 4).
template <class Real>
struct EncoderParams {
  std::int64_t channels = 0;
  std::array<LateralParams<Real>, 4> laterals;
  std::array<AttentionParams<Real>, 4> attention;

  static EncoderParams init(const BackboneConfig& backbone, std::int64_t channels,
                            std::int64_t heads, std::int64_t window, Rng& rng);
  void collect(const std::string& prefix, ParamList<Real>& out) const;
};

template <class Real>
Tensor<Real> lateral_project(const Tensor<Real>& x, LateralParams<Real>& params, Mode mode);

/// Top-down pathway. stages = (X1, X2, X3, X4); returns (L1, L2, L3, L4) at
/// strides 32, 16, 8, 4: L1 = LP(X4), L(k+1) = UP2(Lk) + LP(X(4-k)).
template <class Real>
std::array<Tensor<Real>, 4> top_down(const std::array<Tensor<Real>, 4>& stages,
                                     EncoderParams<Real>& params, Mode mode);

/// Y0 = sum_k resize_to_finest(W-MSA_k(Lk)); no residual around the attention.
template <class Real>
Tensor<Real> pyramid_fuse(const std::array<Tensor<Real>, 4>& laterals,
                          const EncoderParams<Real>& params);

/// backbone_forward -> top_down -> pyramid_fuse.
template <class Real>
Tensor<Real> tfpn_forward(const Tensor<Real>& image, const BackboneParams<Real>& backbone,
                          EncoderParams<Real>& encoder, Mode mode);

}  // namespace mswin
