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

#include "mswin/params.hpp"

namespace mswin {

struct AdamWConfig {
  double lr = 6e-5;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One AdamW update of a flat parameter block at step t (1-based):
///   m = b1 m + (1 - b1) g;  v = b2 v + (1 - b2) g^2
///   p -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * p)
/// Moments are kept in double regardless of the parameter type.
template <class Real>
void adamw_step(std::span<Real> param, std::span<const Real> grad, std::span<double> m,
                std::span<double> v, double lr, const AdamWConfig& cfg, std::int64_t t);

/// Linear warmup over `warmup` steps to `base`, constant afterwards. step is 1-based.
double warmup_lr(double base, std::int64_t step, std::int64_t warmup);

// Optimizer over the trainable entries of a parameter list. Every parameter
// is decayed (decoupled), biases and norm gains included.
template <class Real>
class AdamW {
 public:
  AdamW(const ParamList<Real>& params, const AdamWConfig& config);

  /// Throws NumericError, leaving every parameter untouched, if any gradient
  /// is non-finite. Parameters without a gradient are skipped.
  void step(double lr);
  void zero_grad();

  std::int64_t steps_taken() const { return t_; }
  const AdamWConfig& config() const { return config_; }

 private:
  std::vector<NamedTensor<Real>> params_;
  std::vector<std::vector<double>> m_, v_;
  AdamWConfig config_;
  std::int64_t t_ = 0;
};

}  // namespace mswin
