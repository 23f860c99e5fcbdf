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
#include <utility>
#include <vector>

#include "mswin/model.hpp"

namespace mswin {

// Counting conventions, shared with the runtime FlopCounter:
//   linear            2 * rows * d_in * d_out (bias not counted)
//   attention core    4 * T^2 * E per window (scores and weighted values)
//   layer/batch norm  positions * channels
//   ReLU / GELU       elements
//   bilinear resize   8 * output positions * channels
// Softmax, residual additions and data movement are not counted.
struct FlopsReport {
  std::vector<std::pair<std::string, double>> parts;

  double total() const;
  double part(const std::string& name) const;  // 0 when absent
};

/// Linear over `rows` positions.
double linear_flops(double rows, std::int64_t d_in, std::int64_t d_out);

/// One windowed attention module on an h x w x embed map, projections included.
double window_attention_flops(std::int64_t h, std::int64_t w, std::int64_t embed,
                              std::int64_t window, std::int64_t shift, bool query_projection);

/// Inference FLOPs of one h x w image, split into backbone, encoder, decoder
/// and head. The auxiliary head is training-only and excluded.
FlopsReport flops_estimate(const ModelConfig& config, std::int64_t height, std::int64_t width);

}  // namespace mswin
