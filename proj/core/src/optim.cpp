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

#include "mswin/optim.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "mswin/error.hpp"

namespace mswin {

template <class Real>
void adamw_step(std::span<Real> param, std::span<const Real> grad, std::span<double> m,
                std::span<double> v, double lr, const AdamWConfig& cfg, std::int64_t t) {
  if (grad.size() != param.size() || m.size() != param.size() || v.size() != param.size()) {
    throw DimensionError("adamw_step: parameter, gradient and moment sizes differ");
  }
  if (t < 1) throw ConfigError("adamw_step: step count starts at 1");
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = static_cast<double>(grad[i]);
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    const double p = static_cast<double>(param[i]);
    param[i] = static_cast<Real>(p - lr * (m_hat / (std::sqrt(v_hat) + cfg.eps) +
                                           cfg.weight_decay * p));
  }
}

double warmup_lr(double base, std::int64_t step, std::int64_t warmup) {
  if (warmup <= 0 || step >= warmup) return base;
  return base * static_cast<double>(std::max<std::int64_t>(step, 0)) /
         static_cast<double>(warmup);
}

template <class Real>
AdamW<Real>::AdamW(const ParamList<Real>& params, const AdamWConfig& config) : config_(config) {
  for (const auto& p : params) {
    if (!p.trainable) continue;
    params_.push_back(p);
    m_.emplace_back(static_cast<std::size_t>(p.tensor.numel()), 0.0);
    v_.emplace_back(static_cast<std::size_t>(p.tensor.numel()), 0.0);
  }
}

template <class Real>
void AdamW<Real>::step(double lr) {
  for (const auto& p : params_) {
    if (!p.tensor.has_grad()) continue;
    for (const auto g : p.tensor.grad()) {
      if (!std::isfinite(static_cast<double>(g))) {
        throw NumericError("non-finite gradient in " + p.name + "; optimizer step aborted");
      }
    }
  }
  ++t_;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& tensor = params_[i].tensor;
    if (!tensor.has_grad()) continue;
    std::span<const Real> grad = tensor.grad();
    adamw_step<Real>(tensor.values(), grad, m_[i], v_[i], lr, config_, t_);
  }
}

template <class Real>
void AdamW<Real>::zero_grad() {
  for (auto& p : params_) p.tensor.clear_grad();
}

template void adamw_step<float>(std::span<float>, std::span<const float>, std::span<double>,
                                std::span<double>, double, const AdamWConfig&, std::int64_t);
template void adamw_step<double>(std::span<double>, std::span<const double>, std::span<double>,
                                 std::span<double>, double, const AdamWConfig&, std::int64_t);
template class AdamW<float>;
template class AdamW<double>;

}  // namespace mswin
