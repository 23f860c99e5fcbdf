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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mswin/tensor.hpp"

namespace mswin {

struct GradCheckOptions {
  double tolerance = 1e-4;
  // Entries checked per tensor; 0 checks every entry. When limited, entries
  // are drawn with a seeded RNG.
  std::size_t max_entries_per_tensor = 0;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  bool passed = false;
  double max_relative_error = 0.0;
  std::size_t entries_checked = 0;
  std::string worst_entry;  // "tensor#index analytic=.. numeric=.."
  std::string diagnostic;   // set when the check could not run
};

// Compares reverse-mode gradients of the scalar `f` with respect to each tensor
// in `wrt` against central differences with step h = 1e-5 * max(1, |x|).
//
// The error for one entry is |a - n| / max(|a|, |n|, 1e-2 * max|a|, 1e-6): a
// relative error, floored so entries whose gradient is negligible next to the
// largest one are judged on the gradient's overall scale.
//
// `f` must rebuild its result from the current values of `wrt` on every call.
GradCheckReport grad_check(const std::function<Tensor<double>()>& f,
                           std::span<Tensor<double>> wrt, const GradCheckOptions& options = {});

// Single-input convenience form.
GradCheckReport grad_check(const std::function<Tensor<double>(const Tensor<double>&)>& f,
                           Tensor<double> x, const GradCheckOptions& options = {});

}  // namespace mswin
