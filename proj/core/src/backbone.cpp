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

#include "mswin/backbone.hpp"

#include <cmath>

#include "autograd.hpp"
#include "mswin/error.hpp"
#include "mswin/ops.hpp"

namespace mswin {

BackboneConfig BackboneConfig::swin_nano() { return BackboneConfig{}; }

BackboneConfig BackboneConfig::swin_s() {
  BackboneConfig c;
  c.name = "swin-s";
  c.embed_dim = 96;
  c.depths = {2, 2, 18, 2};
  c.heads = {3, 6, 12, 24};
  c.window = 7;
  return c;
}

BackboneConfig BackboneConfig::swin_b() {
  BackboneConfig c;
  c.name = "swin-b";
  c.embed_dim = 128;
  c.depths = {2, 2, 18, 2};
  c.heads = {4, 8, 16, 32};
  c.window = 12;
  return c;
}

BackboneConfig BackboneConfig::preset(const std::string& name) {
  if (name == "swin-nano") return swin_nano();
  if (name == "swin-s") return swin_s();
  if (name == "swin-b") return swin_b();
  throw ConfigError("unknown backbone preset '" + name + "'");
}

void BackboneConfig::validate() const {
  if (embed_dim <= 0 || patch <= 0 || window <= 0) {
    throw ConfigError("backbone: embed_dim, patch and window must be positive");
  }
  for (int s = 0; s < 4; ++s) {
    if (depths[s] <= 0) throw ConfigError("backbone: stage depths must be positive");
    if (heads[s] <= 0 || stage_channels(s + 1) % heads[s] != 0) {
      throw ConfigError("backbone: stage " + std::to_string(s + 1) + " width " +
                        std::to_string(stage_channels(s + 1)) + " not divisible by " +
                        std::to_string(heads[s]) + " heads");
    }
  }
  if (mlp_ratio <= 0) throw ConfigError("backbone: mlp_ratio must be positive");
}

// ---------------------------------------------------------------------------

template <class Real>
PatchEmbedParams<Real> PatchEmbedParams<Real>::init(std::int64_t patch, std::int64_t channels,
                                                    Rng& rng) {
  PatchEmbedParams p;
  p.proj_w = make_param(trunc_normal<Real>({patch * patch * 3, channels}, rng));
  p.proj_b = make_param(Tensor<Real>({channels}));
  p.norm_g = make_param(Tensor<Real>({channels}, Real(1)));
  p.norm_b = make_param(Tensor<Real>({channels}));
  return p;
}

template <class Real>
void PatchEmbedParams<Real>::collect(const std::string& prefix, ParamList<Real>& out) const {
  out.push_back({join_name(prefix, "proj_w"), proj_w});
  out.push_back({join_name(prefix, "proj_b"), proj_b});
  out.push_back({join_name(prefix, "norm_g"), norm_g});
  out.push_back({join_name(prefix, "norm_b"), norm_b});
}

template <class Real>
PatchMergingParams<Real> PatchMergingParams<Real>::init(std::int64_t channels, Rng& rng) {
  PatchMergingParams p;
  p.norm_g = make_param(Tensor<Real>({4 * channels}, Real(1)));
  p.norm_b = make_param(Tensor<Real>({4 * channels}));
  p.reduce_w = make_param(trunc_normal<Real>({4 * channels, 2 * channels}, rng));
  return p;
}

template <class Real>
void PatchMergingParams<Real>::collect(const std::string& prefix, ParamList<Real>& out) const {
  out.push_back({join_name(prefix, "norm_g"), norm_g});
  out.push_back({join_name(prefix, "norm_b"), norm_b});
  out.push_back({join_name(prefix, "reduce_w"), reduce_w});
}

template <class Real>
SwinBlockParams<Real> SwinBlockParams<Real>::init(std::int64_t embed, std::int64_t heads,
                                                  std::int64_t window, std::int64_t shift,
                                                  std::int64_t hidden, Rng& rng) {
  SwinBlockParams p;
  p.norm1_g = make_param(Tensor<Real>({embed}, Real(1)));
  p.norm1_b = make_param(Tensor<Real>({embed}));
  p.attn = AttentionParams<Real>::init(embed, heads, window, shift, rng);
  p.norm2_g = make_param(Tensor<Real>({embed}, Real(1)));
  p.norm2_b = make_param(Tensor<Real>({embed}));
  p.fc1_w = make_param(trunc_normal<Real>({embed, hidden}, rng));
  p.fc1_b = make_param(Tensor<Real>({hidden}));
  p.fc2_w = make_param(trunc_normal<Real>({hidden, embed}, rng));
  p.fc2_b = make_param(Tensor<Real>({embed}));
  return p;
}

template <class Real>
void SwinBlockParams<Real>::collect(const std::string& prefix, ParamList<Real>& out) const {
  out.push_back({join_name(prefix, "norm1_g"), norm1_g});
  out.push_back({join_name(prefix, "norm1_b"), norm1_b});
  attn.collect(join_name(prefix, "attn"), out);
  out.push_back({join_name(prefix, "norm2_g"), norm2_g});
  out.push_back({join_name(prefix, "norm2_b"), norm2_b});
  out.push_back({join_name(prefix, "fc1_w"), fc1_w});
  out.push_back({join_name(prefix, "fc1_b"), fc1_b});
  out.push_back({join_name(prefix, "fc2_w"), fc2_w});
  out.push_back({join_name(prefix, "fc2_b"), fc2_b});
}

template <class Real>
BackboneParams<Real> BackboneParams<Real>::init(const BackboneConfig& config, Rng& rng) {
  config.validate();
  BackboneParams p;
  p.config = config;
  p.embed = PatchEmbedParams<Real>::init(config.patch, config.embed_dim, rng);
  for (int s = 0; s < 4; ++s) {
    const auto channels = config.stage_channels(s + 1);
    const auto hidden = static_cast<std::int64_t>(std::llround(config.mlp_ratio * channels));
    for (std::int64_t b = 0; b < config.depths[s]; ++b) {
      const auto shift = (b % 2 == 1) ? config.window / 2 : 0;
      p.stages[s].push_back(SwinBlockParams<Real>::init(channels, config.heads[s], config.window,
                                                        shift, hidden, rng));
    }
    if (s < 3) p.merges[s] = PatchMergingParams<Real>::init(channels, rng);
    p.out_norm_g[s] = make_param(Tensor<Real>({channels}, Real(1)));
    p.out_norm_b[s] = make_param(Tensor<Real>({channels}));
  }
  return p;
}

template <class Real>
void BackboneParams<Real>::collect(const std::string& prefix, ParamList<Real>& out) const {
  embed.collect(join_name(prefix, "patch_embed"), out);
  for (int s = 0; s < 4; ++s) {
    const auto stage = join_name(prefix, "stage" + std::to_string(s + 1));
    for (std::size_t b = 0; b < stages[s].size(); ++b) {
      stages[s][b].collect(join_name(stage, "block" + std::to_string(b)), out);
    }
    if (s < 3) merges[s].collect(join_name(stage, "merge"), out);
    out.push_back({join_name(stage, "out_norm_g"), out_norm_g[s]});
    out.push_back({join_name(stage, "out_norm_b"), out_norm_b[s]});
  }
}

// ---------------------------------------------------------------------------

template <class Real>
Tensor<Real> patch_embed(const Tensor<Real>& image, const PatchEmbedParams<Real>& params,
                         std::int64_t patch) {
  const auto patches = patchify(image, patch);
  return layer_norm(linear(patches, params.proj_w, params.proj_b), params.norm_g, params.norm_b);
}

template <class Real>
Tensor<Real> patch_merging(const Tensor<Real>& x, const PatchMergingParams<Real>& params) {
  const auto s = detail::spatial_dims(x.shape(), "patch_merging");
  auto even = x;
  if (s.h % 2 != 0 || s.w % 2 != 0) even = pad2d(x, s.h % 2, s.w % 2, PadMode::kReplicate);
  const auto merged = merge_neighbors(even);
  return linear(layer_norm(merged, params.norm_g, params.norm_b), params.reduce_w, Tensor<Real>{});
}

template <class Real>
Tensor<Real> swin_block(const Tensor<Real>& x, const SwinBlockParams<Real>& params) {
  const auto normed = layer_norm(x, params.norm1_g, params.norm1_b);
  const auto attended = windowed_self_attention(normed, params.attn);
  const auto y = add(x, attended);
  const auto hidden = gelu(linear(layer_norm(y, params.norm2_g, params.norm2_b), params.fc1_w,
                                  params.fc1_b));
  return add(y, linear(hidden, params.fc2_w, params.fc2_b));
}

template <class Real>
std::array<Tensor<Real>, 4> backbone_forward(const Tensor<Real>& image,
                                             const BackboneParams<Real>& params) {
  const auto& cfg = params.config;
  std::array<Tensor<Real>, 4> outputs;
  auto x = patch_embed(image, params.embed, cfg.patch);
  for (int s = 0; s < 4; ++s) {
    NamedScope scope("stage" + std::to_string(s + 1));
    for (std::size_t b = 0; b < params.stages[s].size(); ++b) {
      NamedScope block("block" + std::to_string(b));
      x = swin_block(x, params.stages[s][b]);
    }
    outputs[s] = layer_norm(x, params.out_norm_g[s], params.out_norm_b[s]);
    if (s < 3) {
      NamedScope merge("merge");
      x = patch_merging(x, params.merges[s]);
    }
  }
  return outputs;
}

#define MSWIN_INSTANTIATE_BACKBONE(Real)                                                       \
  template struct PatchEmbedParams<Real>;                                                     \
  template struct PatchMergingParams<Real>;                                                   \
  template struct SwinBlockParams<Real>;                                                      \
  template struct BackboneParams<Real>;                                                       \
  template Tensor<Real> patch_embed(const Tensor<Real>&, const PatchEmbedParams<Real>&,       \
                                    std::int64_t);                                            \
  template Tensor<Real> patch_merging(const Tensor<Real>&, const PatchMergingParams<Real>&);  \
  template Tensor<Real> swin_block(const Tensor<Real>&, const SwinBlockParams<Real>&);        \
  template std::array<Tensor<Real>, 4> backbone_forward(const Tensor<Real>&,                  \
                                                        const BackboneParams<Real>&);

MSWIN_INSTANTIATE_BACKBONE(float)
MSWIN_INSTANTIATE_BACKBONE(double)

}  // namespace mswin
