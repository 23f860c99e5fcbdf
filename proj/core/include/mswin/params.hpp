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
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "mswin/tensor.hpp"

namespace mswin {

using Rng = std::mt19937_64;

// Train mode uses batch statistics in batch norm and updates running estimates.
enum class Mode { kTrain, kEval };

template <class Real>
struct NamedTensor {
  std::string name;
  Tensor<Real> tensor;
  bool trainable = true;  // false for running statistics
};

template <class Real>
using ParamList = std::vector<NamedTensor<Real>>;

inline constexpr double kInitStd = 0.02;

/// Normal(0, std) truncated to [-2 std, 2 std] by resampling.
template <class Real>
Tensor<Real> trunc_normal(Shape shape, Rng& rng, double stddev = kInitStd);

template <class Real>
Tensor<Real> make_param(Tensor<Real> t) {
  t.set_requires_grad(true);
  return t;
}

std::string join_name(const std::string& prefix, const std::string& name);

// Flat little-endian parameter container:
//   magic "MSWN" | u32 version | u32 count |
//   count x { u32 name_len | name bytes | u32 rank | rank x u32 extent |
//             numel x f32 }
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <class Real>
void save_checkpoint(const std::filesystem::path& path, const ParamList<Real>& params);

/// Loads values by name into existing tensors. Every tensor in `params` must be
/// present with an identical shape; extra records are an error.
template <class Real>
void load_checkpoint(const std::filesystem::path& path, ParamList<Real>& params);

}  // namespace mswin
