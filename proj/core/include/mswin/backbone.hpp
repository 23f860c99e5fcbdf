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
#include <vector>

#include "mswin/attention.hpp"
#include "mswin/params.hpp"
#include "mswin/tensor.hpp"

namespace mswin {

// Hierarchical backbone layout. Stage s (1-based) has embed_dim * 2^(s-1)
// channels at stride patch * 2^(s-1).
struct BackboneConfig {
  std::string name = "swin-nano";
  std::int64_t embed_dim = 32;
  std::array<std::int64_t, 4> depths{2, 2, 2, 2};
  std::array<std::int64_t, 4> heads{1, 2, 4, 8};
  std::int64_t window = 4;
  std::int64_t patch = 4;
  double mlp_ratio = 4.0;

  static BackboneConfig swin_nano();
  static BackboneConfig swin_s();
  static BackboneConfig swin_b();
  // "swin-nano", "swin-s" or "swin-b".
  static BackboneConfig preset(const std::string& name);

  std::int64_t stage_channels(int stage) const { return embed_dim << (stage - 1); }
  std::int64_t stage_stride(int stage) const { return patch << (stage - 1); }
  void validate() const;
};

template <class Real>
struct PatchEmbedParams {
  Tensor<Real> proj_w, proj_b;  // [p * p * 3, C], [C]
  Tensor<Real> norm_g, norm_b;

  static PatchEmbedParams init(std::int64_t patch, std::int64_t channels, Rng& rng);
  void collect(const std::string& prefix, ParamList<Real>& out) const;
};

template <class Real>
struct PatchMergingParams {
  Tensor<Real> norm_g, norm_b;  // [4C]
  Tensor<Real> reduce_w;        // [4C, 2C], no bias

  static PatchMergingParams init(std::int64_t channels, Rng& rng);
  void collect(const std::string& prefix, ParamList<Real>& out) const;
};

// Pre-norm transformer block: x + attn(LN(x)), then + MLP(LN(.)) with GELU.
template <class Real>
struct SwinBlockParams {
  Tensor<Real> norm1_g, norm1_b;
  AttentionParams<Real> attn;
  Tensor<Real> norm2_g, norm2_b;
  Tensor<Real> fc1_w, fc1_b;  // [E, hidden]
  Tensor<Real> fc2_w, fc2_b;  // [hidden, E]

  static SwinBlockParams init(std::int64_t embed, std::int64_t heads, std::int64_t window,
                              std::int64_t shift, std::int64_t hidden, Rng& rng);
  void collect(const std::string& prefix, ParamList<Real>& out) const;
};

template <class Real>
struct BackboneParams {
  BackboneConfig config;
  PatchEmbedParams<Real> embed;
  std::array<std::vector<SwinBlockParams<Real>>, 4> stages;
  std::array<PatchMergingParams<Real>, 3> merges;  // after stages 1..3
  // Layer norm applied to each emitted stage output (not to the merge input).
  std::array<Tensor<Real>, 4> out_norm_g, out_norm_b;

  static BackboneParams init(const BackboneConfig& config, Rng& rng);
  void collect(const std::string& prefix, ParamList<Real>& out) const;
};

/// [N, H, W, 3] -> [N, H/p, W/p, C]: flatten p x p x 3 patches, project, layer norm.
template <class Real>
Tensor<Real> patch_embed(const Tensor<Real>& image, const PatchEmbedParams<Real>& params,
                         std::int64_t patch);

/// [N, H, W, C] -> [N, ceil(H/2), ceil(W/2), 2C]. Odd extents are padded by
/// replicating the last row/column.
template <class Real>
Tensor<Real> patch_merging(const Tensor<Real>& x, const PatchMergingParams<Real>& params);

/// Shifted or plain according to params.attn.shift.
template <class Real>
Tensor<Real> swin_block(const Tensor<Real>& x, const SwinBlockParams<Real>& params);

/// The four layer-normed stage outputs at strides 4, 8, 16, 32 (for p = 4).
template <class Real>
std::array<Tensor<Real>, 4> backbone_forward(const Tensor<Real>& image,
                                             const BackboneParams<Real>& params);

}  // namespace mswin
