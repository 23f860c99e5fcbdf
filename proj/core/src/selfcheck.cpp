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

#include "mswin/selfcheck.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <random>
#include <string>

#include "mswin/attention.hpp"
#include "mswin/grad_check.hpp"
#include "mswin/ops.hpp"
#include "mswin/params.hpp"
#include "mswin/reference.hpp"
#include "mswin/window.hpp"

namespace mswin {
namespace {

Tensor<double> random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Tensor<double> t(std::move(shape));
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

AttentionParams<double> random_attention(std::int64_t embed, std::int64_t heads,
                                         std::int64_t window, std::int64_t shift, Rng& rng,
                                         bool query_projection = true) {
  auto p = AttentionParams<double>::init(embed, heads, window, shift, rng, query_projection);
  ParamList<double> all;
  p.collect("attn", all);
  for (auto& np : all) {
    for (auto& v : np.tensor.values()) v = std::normal_distribution<double>(0.0, 0.3)(rng);
  }
  return p;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return buf;
}

struct Reporter {
  std::ostream& out;
  int failures = 0;

  void line(const std::string& name, bool ok, const std::string& detail) {
    out << name << ' ' << (ok ? "PASS" : "FAIL") << ' ' << detail << '\n';
    if (!ok) ++failures;
  }
};

void check_shifted_attention(Reporter& r) {
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    for (const std::int64_t m : {2, 3}) {
      for (const std::int64_t hw : {4, 6}) {
        Rng rng(seed);
        const auto params = random_attention(4, 2, m, 1, rng);
        const auto x = random_tensor({hw, hw, 4}, rng);
        const auto fast = sw_msa(x, params);
        const auto slow = reference_window_attention(x, params);
        for (std::int64_t i = 0; i < fast.numel(); ++i) {
          worst = std::max(worst, std::abs(fast.values()[i] - slow.values()[i]));
        }
      }
    }
  }
  r.line("sw_msa_vs_reference", worst < 1e-5, "max_abs_diff=" + sci(worst));
}

void check_round_trip(Reporter& r) {
  bool ok = true;
  Rng rng(7);
  for (const std::int64_t m : {2, 3, 5, 7, 12}) {
    for (std::int64_t h = 1; h <= 16 && ok; h += 3) {
      for (std::int64_t w = 1; w <= 16 && ok; w += 5) {
        const auto x = random_tensor({h, w, 2}, rng);
        const auto grid = WindowGrid::make(h, w, m, 0);
        const auto back = window_reverse(window_partition(x, grid), grid, true, false);
        ok = back.shape() == x.shape() &&
             std::equal(back.values().begin(), back.values().end(), x.values().begin());
      }
    }
  }
  r.line("window_round_trip", ok, "sampled H,W <= 16");
}

void check_gradients(Reporter& r) {
  GradCheckOptions opts;
  Rng rng(11);
  auto report = [&](const std::string& name, const GradCheckReport& g, double tol) {
    r.line("grad_" + name, g.passed && g.max_relative_error <= tol,
           "max_rel_err=" + sci(g.max_relative_error));
  };

  {
    auto x = random_tensor({3, 4}, rng), w = random_tensor({4, 5}, rng), b = random_tensor({5}, rng);
    std::vector<Tensor<double>> wrt{x, w, b};
    report("linear", grad_check([&] { return sum(mul(linear(x, w, b), linear(x, w, b))); }, wrt, opts),
           1e-4);
  }
  {
    auto x = random_tensor({3, 6}, rng), g = random_tensor({6}, rng), b = random_tensor({6}, rng);
    auto weights = random_tensor({3, 6}, rng);
    std::vector<Tensor<double>> wrt{x, g, b};
    report("layer_norm", grad_check([&] { return sum(mul(layer_norm(x, g, b), weights)); }, wrt, opts),
           1e-4);
  }
  {
    auto x = random_tensor({2, 5}, rng), weights = random_tensor({2, 5}, rng);
    report("softmax", grad_check([&](const Tensor<double>& t) { return sum(mul(softmax(t), weights)); },
                                 x, opts),
           1e-4);
    report("gelu", grad_check([&](const Tensor<double>& t) { return sum(mul(gelu(t), weights)); },
                              x, opts),
           1e-4);
  }
  {
    auto x = random_tensor({3, 4, 2}, rng), weights = random_tensor({5, 7, 2}, rng);
    report("bilinear_resize",
           grad_check([&](const Tensor<double>& t) { return sum(mul(bilinear_resize(t, 5, 7), weights)); },
                      x, opts),
           1e-4);
  }
  {
    const auto params = random_attention(4, 2, 3, 1, rng);
    auto x = random_tensor({5, 5, 4}, rng), weights = random_tensor({5, 5, 4}, rng);
    report("sw_msa", grad_check([&](const Tensor<double>& t) { return sum(mul(sw_msa(t, params), weights)); },
                                x, opts),
           1e-3);
  }
}

}  // namespace

int run_selfcheck(std::ostream& out) {
  Reporter r{out};
  check_shifted_attention(r);
  check_round_trip(r);
  check_gradients(r);
  out << "selfcheck " << (r.failures == 0 ? "PASS" : "FAIL") << " failures=" << r.failures
      << '\n';
  return r.failures;
}

}  // namespace mswin
