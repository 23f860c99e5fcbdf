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

#include "mswin/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "mswin/error.hpp"

namespace mswin {

namespace {

double evaluate(const std::function<Tensor<double>()>& f) {
  const auto y = f();
  if (y.numel() != 1) throw DimensionError("grad_check: function is not scalar-valued");
  return y.item();
}

std::vector<std::size_t> pick_entries(std::size_t n, std::size_t limit, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (limit == 0 || limit >= n) return idx;
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(limit);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

GradCheckReport grad_check(const std::function<Tensor<double>()>& f,
                           std::span<Tensor<double>> wrt, const GradCheckOptions& options) {
  GradCheckReport report;
  std::vector<bool> previous_flags;
  for (auto& t : wrt) {
    previous_flags.push_back(t.requires_grad());
    t.clear_grad();
    t.set_requires_grad(true);
  }

  std::vector<std::vector<double>> analytic;
  try {
    Tape<double> tape;
    {
      TapeGuard<double> guard(tape);
      auto y = f();
      if (y.numel() != 1) throw DimensionError("grad_check: function is not scalar-valued");
      if (!std::isfinite(y.item())) throw NumericError("grad_check: non-finite function value");
      tape.backward(y);
    }
    for (auto& t : wrt) {
      auto g = t.grad();
      analytic.emplace_back(g.begin(), g.end());
    }
  } catch (const std::exception& e) {
    report.diagnostic = e.what();
    for (std::size_t i = 0; i < wrt.size(); ++i) wrt[i].set_requires_grad(previous_flags[i]);
    return report;
  }

  double scale = 0;
  for (const auto& g : analytic) {
    for (double v : g) {
      if (!std::isfinite(v)) {
        report.diagnostic = "grad_check: non-finite analytic gradient";
        return report;
      }
      scale = std::max(scale, std::abs(v));
    }
  }
  const double floor = std::max(1e-2 * scale, 1e-6);

  std::mt19937_64 rng(options.seed);
  report.passed = true;
  for (std::size_t t = 0; t < wrt.size(); ++t) {
    auto values = wrt[t].values();
    for (std::size_t i : pick_entries(values.size(), options.max_entries_per_tensor, rng)) {
      const double original = values[i];
      const double h = 1e-5 * std::max(1.0, std::abs(original));
      values[i] = original + h;
      const double up = evaluate(f);
      values[i] = original - h;
      const double down = evaluate(f);
      values[i] = original;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        report.passed = false;
        report.diagnostic = "grad_check: non-finite function value under perturbation";
        break;
      }
      const double numeric = (up - down) / (2 * h);
      const double a = analytic[t][i];
      const double err =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      ++report.entries_checked;
      if (err > report.max_relative_error) {
        report.max_relative_error = err;
        std::ostringstream os;
        os << "tensor" << t << "#" << i << " analytic=" << a << " numeric=" << numeric;
        report.worst_entry = os.str();
      }
    }
  }
  for (std::size_t i = 0; i < wrt.size(); ++i) {
    wrt[i].set_requires_grad(previous_flags[i]);
    wrt[i].clear_grad();
  }
  report.passed = report.passed && report.diagnostic.empty() &&
                  report.max_relative_error <= options.tolerance;
  return report;
}

GradCheckReport grad_check(const std::function<Tensor<double>(const Tensor<double>&)>& f,
                           Tensor<double> x, const GradCheckOptions& options) {
  std::vector<Tensor<double>> wrt{x};
  return grad_check([&] { return f(x); }, wrt, options);
}

}  // namespace mswin
