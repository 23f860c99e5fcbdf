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

#include "mswin/model.hpp"

#include "autograd.hpp"
#include "mswin/error.hpp"

namespace mswin {

void ModelConfig::validate() const {
  backbone.validate();
  decoder.schedule.validate(/*any_shift=*/decoder.kind == DecoderKind::kMSwinC);
  if (decoder.channels <= 0 || decoder.heads <= 0 || decoder.channels % decoder.heads != 0) {
    throw ConfigError("model: d_enc " + std::to_string(decoder.channels) +
                      " must be a positive multiple of decoder heads " +
                      std::to_string(decoder.heads));
  }
  if (decoder.mlp_ratio <= 0) throw ConfigError("model: decoder_mlp_ratio must be positive");
  if (fusion_window <= 0) throw ConfigError("model: fusion_window must be positive");
  if (aux_hidden <= 0) throw ConfigError("model: aux_hidden must be positive");
  if (classes < 1 || classes > 255) throw ConfigError("model: classes must lie in [1, 255]");
}

template <class Real>
SegmentationModel<Real>::SegmentationModel(const ModelConfig& config) : config_(config) {
  config_.validate();
  Rng rng(config_.seed);
  backbone_ = BackboneParams<Real>::init(config_.backbone, rng);
  encoder_ = EncoderParams<Real>::init(config_.backbone, config_.decoder.channels,
                                       config_.decoder.heads, config_.fusion_window, rng);
  decoder_ = DecoderParams<Real>::init(config_.decoder, rng);
  head_ = SegHeadParams<Real>::init(config_.decoder.channels, config_.classes, rng);
  aux_ = AuxHeadParams<Real>::init(config_.backbone.stage_channels(3), config_.aux_hidden,
                                   config_.classes, rng);
}

template <class Real>
ModelOutput<Real> SegmentationModel<Real>::forward(const Tensor<Real>& image, Mode mode,
                                                   bool with_aux) {
  const auto s = detail::spatial_dims(image.shape(), "forward");
  if (s.c != 3) throw DimensionError("forward: expected 3 image channels, got " + shape_string(image.shape()));
  const auto stride = config_.stride();
  if (s.h % stride != 0 || s.w % stride != 0) {
    throw DimensionError("forward: input " + std::to_string(s.h) + "x" + std::to_string(s.w) +
                         " is not a multiple of " + std::to_string(stride));
  }
  std::array<Tensor<Real>, 4> stages;
  {
    NamedScope scope("backbone");
    stages = backbone_forward(image, backbone_);
  }
  Tensor<Real> y0;
  {
    NamedScope scope("encoder");
    y0 = pyramid_fuse(top_down(stages, encoder_, mode), encoder_);
  }
  Tensor<Real> z;
  {
    NamedScope scope("decoder");
    z = decode(y0, decoder_);
  }
  ModelOutput<Real> out;
  {
    NamedScope scope("head");
    out.logits = seg_head(z, head_, s.h, s.w);
  }
  if (with_aux) {
    NamedScope scope("aux_head");
    out.aux_logits = aux_head(stages[2], aux_, s.h, s.w);
  }
  return out;
}

template <class Real>
ParamList<Real> SegmentationModel<Real>::parameters() const {
  ParamList<Real> out;
  backbone_.collect("backbone", out);
  encoder_.collect("encoder", out);
  decoder_.collect("decoder", out);
  head_.collect("head", out);
  aux_.collect("aux_head", out);
  return out;
}

template <class Real>
std::vector<BatchNormStats<Real>*> SegmentationModel<Real>::batch_norm_stats() {
  std::vector<BatchNormStats<Real>*> out;
  for (auto& lateral : encoder_.laterals) out.push_back(&lateral.stats);
  return out;
}

template class SegmentationModel<float>;
template class SegmentationModel<double>;

}  // namespace mswin
