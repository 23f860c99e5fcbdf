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

#include "mswin/tfpn.hpp"

#include "autograd.hpp"
#include "mswin/error.hpp"

namespace mswin {

template <class Real>
LateralParams<Real> LateralParams<Real>::init(std::int64_t in_channels,
                                              std::int64_t out_channels, Rng& rng) {
  LateralParams p;
  p.w = make_param(trunc_normal<Real>({in_channels, out_channels}, rng));
  p.b = make_param(Tensor<Real>({out_channels}));
  p.bn_g = make_param(Tensor<Real>({out_channels}, Real(1)));
  p.bn_b = make_param(Tensor<Real>({out_channels}));
  p.stats.running_mean = Tensor<Real>({out_channels});
  p.stats.running_var = Tensor<Real>({out_channels}, Real(1));
  return p;
}

template <class Real>
void LateralParams<Real>::collect(const std::string& prefix, ParamList<Real>& out) const {
  out.push_back({join_name(prefix, "w"), w});
  out.push_back({join_name(prefix, "b"), b});
  out.push_back({join_name(prefix, "bn_g"), bn_g});
  out.push_back({join_name(prefix, "bn_b"), bn_b});
  out.push_back({join_name(prefix, "bn_running_mean"), stats.running_mean, false});
  out.push_back({join_name(prefix, "bn_running_var"), stats.running_var, false});
}

template <class Real>
EncoderParams<Real> EncoderParams<Real>::init(const BackboneConfig& backbone,
                                              std::int64_t channels, std::int64_t heads,
                                              std::int64_t window, Rng& rng) {
  EncoderParams p;
  p.channels = channels;
  for (int level = 0; level < 4; ++level) {
    const int stage = 4 - level;
    p.laterals[level] = LateralParams<Real>::init(backbone.stage_channels(stage), channels, rng);
  }
  for (int level = 0; level < 4; ++level) {
    p.attention[level] = AttentionParams<Real>::init(channels, heads, window, 0, rng);
  }
  return p;
}

template <class Real>
void EncoderParams<Real>::collect(const std::string& prefix, ParamList<Real>& out) const {
  for (int level = 0; level < 4; ++level) {
    laterals[level].collect(join_name(prefix, "lateral" + std::to_string(level + 1)), out);
  }
  for (int level = 0; level < 4; ++level) {
    attention[level].collect(join_name(prefix, "wmsa" + std::to_string(level + 1)), out);
  }
}

template <class Real>
Tensor<Real> lateral_project(const Tensor<Real>& x, LateralParams<Real>& params, Mode mode) {
  const auto projected = linear(x, params.w, params.b);
  return relu(batch_norm(projected, params.bn_g, params.bn_b, params.stats, mode == Mode::kTrain));
}

template <class Real>
std::array<Tensor<Real>, 4> top_down(const std::array<Tensor<Real>, 4>& stages,
                                     EncoderParams<Real>& params, Mode mode) {
  std::array<Tensor<Real>, 4> out;
  {
    NamedScope scope("lateral1");
    out[0] = lateral_project(stages[3], params.laterals[0], mode);
  }
  for (int level = 1; level < 4; ++level) {
    NamedScope scope("lateral" + std::to_string(level + 1));
    const auto& skip = stages[3 - level];
    const auto s = detail::spatial_dims(skip.shape(), "top_down");
    const auto prev = detail::spatial_dims(out[level - 1].shape(), "top_down");
    if (s.h != 2 * prev.h && s.h != 2 * prev.h - 1) {
      throw DimensionError("top_down: stage extents " + shape_string(skip.shape()) +
                           " do not double " + shape_string(out[level - 1].shape()));
    }
    const auto lateral = lateral_project(skip, params.laterals[level], mode);
    out[level] = add(bilinear_resize(out[level - 1], s.h, s.w), lateral);
  }
  return out;
}

template <class Real>
Tensor<Real> pyramid_fuse(const std::array<Tensor<Real>, 4>& laterals,
                          const EncoderParams<Real>& params) {
  const auto finest = detail::spatial_dims(laterals[3].shape(), "pyramid_fuse");
  std::array<Tensor<Real>, 4> fused;
  for (int level = 0; level < 4; ++level) {
    NamedScope scope("fuse" + std::to_string(level + 1));
    auto attended = w_msa(laterals[level], params.attention[level]);
    const auto s = detail::spatial_dims(attended.shape(), "pyramid_fuse");
    fused[level] = (s.h == finest.h && s.w == finest.w)
                       ? attended
                       : bilinear_resize(attended, finest.h, finest.w);
  }
  return add_n(std::span<const Tensor<Real>>(fused));
}

template <class Real>
Tensor<Real> tfpn_forward(const Tensor<Real>& image, const BackboneParams<Real>& backbone,
                          EncoderParams<Real>& encoder, Mode mode) {
  std::array<Tensor<Real>, 4> stages;
  {
    NamedScope scope("backbone");
    stages = backbone_forward(image, backbone);
  }
  NamedScope scope("encoder");
  return pyramid_fuse(top_down(stages, encoder, mode), encoder);
}

#define MSWIN_INSTANTIATE_TFPN(Real)                                                          \
  template struct LateralParams<Real>;                                                       \
  template struct EncoderParams<Real>;                                                       \
  template Tensor<Real> lateral_project(const Tensor<Real>&, LateralParams<Real>&, Mode);    \
  template std::array<Tensor<Real>, 4> top_down(const std::array<Tensor<Real>, 4>&,          \
                                                EncoderParams<Real>&, Mode);                 \
  template Tensor<Real> pyramid_fuse(const std::array<Tensor<Real>, 4>&,                     \
                                     const EncoderParams<Real>&);                            \
  template Tensor<Real> tfpn_forward(const Tensor<Real>&, const BackboneParams<Real>&,       \
                                     EncoderParams<Real>&, Mode);

MSWIN_INSTANTIATE_TFPN(float)
MSWIN_INSTANTIATE_TFPN(double)

}  // namespace mswin
