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
#include <vector>

#include "mswin/backbone.hpp"
#include "mswin/decoders.hpp"
#include "mswin/params.hpp"
#include "mswin/tfpn.hpp"

namespace mswin {

struct ModelConfig {
  BackboneConfig backbone = BackboneConfig::swin_nano();
  DecoderConfig decoder;        // decoder.channels is the fusion width d_enc
  std::int64_t fusion_window = 7;  // W-MSA window on each lateral
  std::int64_t aux_hidden = 256;
  std::int64_t classes = 4;
  std::uint64_t seed = 0;

  // Input extents must be multiples of this (backbone stride law).
  std::int64_t stride() const { return backbone.stage_stride(4); }
  void validate() const;
};

template <class Real>
struct ModelOutput {
  Tensor<Real> logits;      // [N, H, W, K]
  Tensor<Real> aux_logits;  // [N, H, W, K], undefined unless requested
};

template <class Real>
class SegmentationModel {
 public:
  SegmentationModel() = default;
  explicit SegmentationModel(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }

  /// image: [N, H, W, 3] with H, W multiples of stride(). Scopes "backbone",
  /// "encoder", "decoder", "head" and "aux_head" label tape nodes and FLOPs.
  ModelOutput<Real> forward(const Tensor<Real>& image, Mode mode, bool with_aux = false);

  /// Named parameters and running statistics, in a fixed order.
  ParamList<Real> parameters() const;

  /// Running statistics of every batch-norm layer.
  std::vector<BatchNormStats<Real>*> batch_norm_stats();

  BackboneParams<Real>& backbone() { return backbone_; }
  EncoderParams<Real>& encoder() { return encoder_; }
  DecoderParams<Real>& decoder() { return decoder_; }
  SegHeadParams<Real>& head() { return head_; }
  AuxHeadParams<Real>& aux() { return aux_; }

 private:
  ModelConfig config_;
  BackboneParams<Real> backbone_;
  EncoderParams<Real> encoder_;
  DecoderParams<Real> decoder_;
  SegHeadParams<Real> head_;
  AuxHeadParams<Real> aux_;
};

}  // namespace mswin
