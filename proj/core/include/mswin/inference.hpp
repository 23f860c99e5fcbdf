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

#include "mswin/data.hpp"
#include "mswin/metrics.hpp"
#include "mswin/model.hpp"

namespace mswin {

struct InferenceOptions {
  // Images larger than the crop are processed as overlapping crop-sized tiles
  // with stride crop / 2; 0 disables tiling.
  std::int64_t crop_h = 0;
  std::int64_t crop_w = 0;
};

/// Softmax class probabilities [H, W, K] for one [H, W, 3] image in eval mode.
/// The image is zero-padded to the model stride and the result cropped back.
Tensor<float> predict_probabilities(SegmentationModel<float>& model, const Tensor<float>& image,
                                    const InferenceOptions& options = {});

/// Per-pixel argmax; ties go to the lowest class index.
LabelMap argmax_labels(const Tensor<float>& probabilities);

LabelMap infer_ss(SegmentationModel<float>& model, const Tensor<float>& image,
                  const InferenceOptions& options = {});

/// Averages probabilities over rescaled (and optionally flipped) copies of the
/// image, each resized back to the input extents, then takes the argmax.
LabelMap infer_ms(SegmentationModel<float>& model, const Tensor<float>& image,
                  std::span<const double> scales, bool flip,
                  const InferenceOptions& options = {});

struct EvalSettings {
  bool multi_scale = false;
  std::vector<double> scales{0.75, 1.0, 1.25};
  bool flip = true;
  InferenceOptions options;
};

ConfusionMatrix evaluate(SegmentationModel<float>& model, std::span<const Sample> samples,
                         const EvalSettings& settings = {});

}  // namespace mswin
