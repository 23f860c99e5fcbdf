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

#include "mswin/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "autograd.hpp"

namespace mswin {

using detail::ConstMatrixMap;
using detail::MatrixMap;
using detail::record;
using detail::wants_grad;

namespace {

std::int64_t last_dim(const Shape& s, const char* op) {
  if (s.empty()) throw DimensionError(std::string(op) + ": scalar input");
  return s.back();
}

template <class Real>
void require_same_shape(const Tensor<Real>& a, const Tensor<Real>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

template <class Real>
void accumulate(const Tensor<Real>& target, std::span<const Real> delta) {
  auto g = target.grad();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += delta[i];
}

}  // namespace

// ---------------------------------------------------------------------------

template <class Real>
Tensor<Real> linear(const Tensor<Real>& x, const Tensor<Real>& weight, const Tensor<Real>& bias) {
  const auto d_in = last_dim(x.shape(), "linear");
  if (weight.rank() != 2 || weight.dim(0) != d_in) {
    throw DimensionError("linear: input " + shape_string(x.shape()) + " incompatible with weight " +
                         shape_string(weight.shape()));
  }
  const auto d_out = weight.dim(1);
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != d_out)) {
    throw DimensionError("linear: bias " + shape_string(bias.shape()) + " for output width " +
                         std::to_string(d_out));
  }
  const auto rows = x.numel() / d_in;
  Shape out_shape = x.shape();
  out_shape.back() = d_out;
  Tensor<Real> y(out_shape);

  ConstMatrixMap<Real> X(x.values().data(), rows, d_in);
  ConstMatrixMap<Real> Wm(weight.values().data(), d_in, d_out);
  MatrixMap<Real> Y(y.values().data(), rows, d_out);
  Y.noalias() = X * Wm;
  if (bias.defined()) {
    Eigen::Map<const Eigen::Matrix<Real, 1, Eigen::Dynamic>> b(bias.values().data(), d_out);
    Y.rowwise() += b;
  }
  FlopCounter::add(2.0 * static_cast<double>(rows) * static_cast<double>(d_in) *
                   static_cast<double>(d_out));

  if (wants_grad<Real>({&x, &weight, &bias})) {
    record<Real>(OpKind::kLinear, {x, weight, bias}, y,
                 [x, weight, bias, y, rows, d_in, d_out]() mutable {
                   ConstMatrixMap<Real> dY(y.grad().data(), rows, d_out);
                   if (x.requires_grad()) {
                     MatrixMap<Real> dX(x.grad().data(), rows, d_in);
                     ConstMatrixMap<Real> Wm(weight.values().data(), d_in, d_out);
                     dX.noalias() += dY * Wm.transpose();
                   }
                   if (weight.requires_grad()) {
                     MatrixMap<Real> dW(weight.grad().data(), d_in, d_out);
                     ConstMatrixMap<Real> X(x.values().data(), rows, d_in);
                     dW.noalias() += X.transpose() * dY;
                   }
                   if (bias.defined() && bias.requires_grad()) {
                     Eigen::Map<Eigen::Matrix<Real, 1, Eigen::Dynamic>> db(bias.grad().data(),
                                                                             d_out);
                     db += dY.colwise().sum();
                   }
                 });
  }
  return y;
}

// ---------------------------------------------------------------------------

template <class Real>
Tensor<Real> add(const Tensor<Real>& a, const Tensor<Real>& b) {
  require_same_shape(a, b, "add");
  Tensor<Real> y(a.shape());
  auto out = y.values();
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  if (wants_grad<Real>({&a, &b})) {
    record<Real>(OpKind::kAdd, {a, b}, y, [a, b, y]() mutable {
      if (a.requires_grad()) accumulate<Real>(a, y.grad());
      if (b.requires_grad()) accumulate<Real>(b, y.grad());
    });
  }
  return y;
}

template <class Real>
Tensor<Real> add_n(std::span<const Tensor<Real>> terms) {
  if (terms.empty()) throw DimensionError("add_n: no terms");
  for (const auto& t : terms) require_same_shape(terms.front(), t, "add_n");
  Tensor<Real> y(terms.front().shape());
  auto out = y.values();
  for (const auto& t : terms) {
    auto v = t.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
  }
  bool grad = false;
  if (active_tape<Real>() != nullptr) {
    for (const auto& t : terms) grad = grad || t.requires_grad();
  }
  if (grad) {
    std::vector<Tensor<Real>> inputs(terms.begin(), terms.end());
    record<Real>(OpKind::kAdd, inputs, y, [inputs, y]() mutable {
      for (auto& t : inputs) {
        if (t.requires_grad()) accumulate<Real>(t, y.grad());
      }
    });
  }
  return y;
}

template <class Real>
Tensor<Real> mul(const Tensor<Real>& a, const Tensor<Real>& b) {
  require_same_shape(a, b, "mul");
  Tensor<Real> y(a.shape());
  auto out = y.values();
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  if (wants_grad<Real>({&a, &b})) {
    record<Real>(OpKind::kMul, {a, b}, y, [a, b, y]() mutable {
      auto gy = y.grad();
      if (a.requires_grad()) {
        auto ga = a.grad();
        auto bv = b.values();
        for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * bv[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad();
        auto av = a.values();
        for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * av[i];
      }
    });
  }
  return y;
}

template <class Real>
Tensor<Real> scale(const Tensor<Real>& x, Real factor) {
  Tensor<Real> y(x.shape());
  auto out = y.values();
  auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * factor;
  if (wants_grad<Real>({&x})) {
    record<Real>(OpKind::kScale, {x}, y, [x, y, factor]() mutable {
      auto gx = x.grad();
      auto gy = y.grad();
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * factor;
    });
  }
  return y;
}

template <class Real>
Tensor<Real> relu(const Tensor<Real>& x) {
  Tensor<Real> y(x.shape());
  auto out = y.values();
  auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > Real(0) ? xv[i] : Real(0);
  FlopCounter::add(static_cast<double>(x.numel()));
  if (wants_grad<Real>({&x})) {
    record<Real>(OpKind::kRelu, {x}, y, [x, y]() mutable {
      auto gx = x.grad();
      auto gy = y.grad();
      auto xv = x.values();
      for (std::size_t i = 0; i < gy.size(); ++i) {
        if (xv[i] > Real(0)) gx[i] += gy[i];
      }
    });
  }
  return y;
}

template <class Real>
Tensor<Real> gelu(const Tensor<Real>& x) {
  constexpr Real kInvSqrt2 = Real(0.70710678118654752440);
  const Real kInvSqrt2Pi = Real(1) / std::sqrt(Real(2) * std::numbers::pi_v<Real>);
  Tensor<Real> y(x.shape());
  auto out = y.values();
  auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = Real(0.5) * xv[i] * (Real(1) + std::erf(xv[i] * kInvSqrt2));
  }
  FlopCounter::add(static_cast<double>(x.numel()));
  if (wants_grad<Real>({&x})) {
    record<Real>(OpKind::kGelu, {x}, y, [x, y, kInvSqrt2Pi]() mutable {
      auto gx = x.grad();
      auto gy = y.grad();
      auto xv = x.values();
      for (std::size_t i = 0; i < gy.size(); ++i) {
        const Real v = xv[i];
        const Real cdf = Real(0.5) * (Real(1) + std::erf(v * kInvSqrt2));
        const Real pdf = kInvSqrt2Pi * std::exp(Real(-0.5) * v * v);
        gx[i] += gy[i] * (cdf + v * pdf);
      }
    });
  }
  return y;
}

// ---------------------------------------------------------------------------

template <class Real>
Tensor<Real> softmax(const Tensor<Real>& x, int axis) {
  const int r = x.rank();
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) throw DimensionError("softmax: invalid axis");
  std::int64_t outer = 1, inner = 1;
  const std::int64_t len = x.dim(a);
  for (int i = 0; i < a; ++i) outer *= x.dim(i);
  for (int i = a + 1; i < r; ++i) inner *= x.dim(i);

  Tensor<Real> y(x.shape());
  auto xv = x.values();
  auto yv = y.values();
  for (std::int64_t o = 0; o < outer; ++o) {
    for (std::int64_t in = 0; in < inner; ++in) {
      const std::int64_t base = o * len * inner + in;
      Real mx = xv[base];
      for (std::int64_t k = 1; k < len; ++k) mx = std::max(mx, xv[base + k * inner]);
      Real total = 0;
      for (std::int64_t k = 0; k < len; ++k) {
        const Real e = std::exp(xv[base + k * inner] - mx);
        yv[base + k * inner] = e;
        total += e;
      }
      for (std::int64_t k = 0; k < len; ++k) yv[base + k * inner] /= total;
    }
  }
  if (wants_grad<Real>({&x})) {
    record<Real>(OpKind::kSoftmax, {x}, y, [x, y, outer, inner, len]() mutable {
      auto gx = x.grad();
      auto gy = y.grad();
      auto yv = y.values();
      for (std::int64_t o = 0; o < outer; ++o) {
        for (std::int64_t in = 0; in < inner; ++in) {
          const std::int64_t base = o * len * inner + in;
          Real dot = 0;
          for (std::int64_t k = 0; k < len; ++k) dot += gy[base + k * inner] * yv[base + k * inner];
          for (std::int64_t k = 0; k < len; ++k) {
            const auto idx = base + k * inner;
            gx[idx] += yv[idx] * (gy[idx] - dot);
          }
        }
      }
    });
  }
  return y;
}

// ---------------------------------------------------------------------------

template <class Real>
Tensor<Real> layer_norm(const Tensor<Real>& x, const Tensor<Real>& gamma, const Tensor<Real>& beta,
                        double eps) {
  const auto d = last_dim(x.shape(), "layer_norm");
  if (gamma.numel() != d || beta.numel() != d) {
    throw DimensionError("layer_norm: affine parameters do not match width " + std::to_string(d));
  }
  const auto rows = x.numel() / d;
  Tensor<Real> y(x.shape());
  std::vector<Real> mean(static_cast<std::size_t>(rows));
  std::vector<Real> rstd(static_cast<std::size_t>(rows));
  auto xv = x.values();
  auto yv = y.values();
  auto gv = gamma.values();
  auto bv = beta.values();
  for (std::int64_t r = 0; r < rows; ++r) {
    const Real* row = xv.data() + r * d;
    double m = 0;
    for (std::int64_t i = 0; i < d; ++i) m += row[i];
    m /= static_cast<double>(d);
    double var = 0;
    for (std::int64_t i = 0; i < d; ++i) var += (row[i] - m) * (row[i] - m);
    var /= static_cast<double>(d);
    const double rs = 1.0 / std::sqrt(var + eps);
    mean[r] = static_cast<Real>(m);
    rstd[r] = static_cast<Real>(rs);
    Real* out = yv.data() + r * d;
    for (std::int64_t i = 0; i < d; ++i) {
      out[i] = static_cast<Real>((row[i] - m) * rs) * gv[i] + bv[i];
    }
  }
  FlopCounter::add(static_cast<double>(x.numel()));
  if (wants_grad<Real>({&x, &gamma, &beta})) {
    record<Real>(OpKind::kLayerNorm, {x, gamma, beta}, y,
                 [x, gamma, beta, y, mean = std::move(mean), rstd = std::move(rstd), rows,
                  d]() mutable {
                   auto gy = y.grad();
                   auto xv = x.values();
                   auto gv = gamma.values();
                   std::vector<Real> xhat(static_cast<std::size_t>(d));
                   std::vector<Real> dxhat(static_cast<std::size_t>(d));
                   for (std::int64_t r = 0; r < rows; ++r) {
                     const Real* row = xv.data() + r * d;
                     const Real* g = gy.data() + r * d;
                     Real sum_d = 0, sum_dx = 0;
                     for (std::int64_t i = 0; i < d; ++i) {
                       xhat[i] = (row[i] - mean[r]) * rstd[r];
                       dxhat[i] = g[i] * gv[i];
                       sum_d += dxhat[i];
                       sum_dx += dxhat[i] * xhat[i];
                     }
                     if (gamma.requires_grad()) {
                       auto gg = gamma.grad();
                       for (std::int64_t i = 0; i < d; ++i) gg[i] += g[i] * xhat[i];
                     }
                     if (beta.requires_grad()) {
                       auto gb = beta.grad();
                       for (std::int64_t i = 0; i < d; ++i) gb[i] += g[i];
                     }
                     if (x.requires_grad()) {
                       Real* gx = x.grad().data() + r * d;
                       const Real inv_d = Real(1) / static_cast<Real>(d);
                       for (std::int64_t i = 0; i < d; ++i) {
                         gx[i] += rstd[r] * (dxhat[i] - inv_d * sum_d - xhat[i] * inv_d * sum_dx);
                       }
                     }
                   }
                 });
  }
  return y;
}

template <class Real>
Tensor<Real> batch_norm(const Tensor<Real>& x, const Tensor<Real>& gamma,
                        const Tensor<Real>& beta, BatchNormStats<Real>& stats, bool training) {
  const auto d = last_dim(x.shape(), "batch_norm");
  if (gamma.numel() != d || beta.numel() != d || stats.running_mean.numel() != d ||
      stats.running_var.numel() != d) {
    throw DimensionError("batch_norm: parameters do not match width " + std::to_string(d));
  }
  const auto rows = x.numel() / d;
  auto xv = x.values();
  std::vector<Real> mean(static_cast<std::size_t>(d));
  std::vector<Real> rstd(static_cast<std::size_t>(d));
  if (training) {
    auto rm = stats.running_mean.values();
    auto rv = stats.running_var.values();
    for (std::int64_t c = 0; c < d; ++c) {
      double m = 0;
      for (std::int64_t r = 0; r < rows; ++r) m += xv[r * d + c];
      m /= static_cast<double>(rows);
      double var = 0;
      for (std::int64_t r = 0; r < rows; ++r) {
        const double t = xv[r * d + c] - m;
        var += t * t;
      }
      const double biased = var / static_cast<double>(rows);
      const double unbiased = rows > 1 ? var / static_cast<double>(rows - 1) : biased;
      mean[c] = static_cast<Real>(m);
      rstd[c] = static_cast<Real>(1.0 / std::sqrt(biased + stats.eps));
      rm[c] = static_cast<Real>((1.0 - stats.momentum) * rm[c] + stats.momentum * m);
      rv[c] = static_cast<Real>((1.0 - stats.momentum) * rv[c] + stats.momentum * unbiased);
    }
  } else {
    auto rm = stats.running_mean.values();
    auto rv = stats.running_var.values();
    for (std::int64_t c = 0; c < d; ++c) {
      mean[c] = rm[c];
      rstd[c] = static_cast<Real>(1.0 / std::sqrt(static_cast<double>(rv[c]) + stats.eps));
    }
  }
  Tensor<Real> y(x.shape());
  auto yv = y.values();
  auto gv = gamma.values();
  auto bv = beta.values();
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t c = 0; c < d; ++c) {
      yv[r * d + c] = (xv[r * d + c] - mean[c]) * rstd[c] * gv[c] + bv[c];
    }
  }
  FlopCounter::add(static_cast<double>(x.numel()));
  if (wants_grad<Real>({&x, &gamma, &beta})) {
    record<Real>(
        OpKind::kBatchNorm, {x, gamma, beta}, y,
        [x, gamma, beta, y, mean = std::move(mean), rstd = std::move(rstd), rows, d,
         training]() mutable {
          auto gy = y.grad();
          auto xv = x.values();
          auto gv = gamma.values();
          for (std::int64_t c = 0; c < d; ++c) {
            Real sum_d = 0, sum_dx = 0, sum_g = 0, sum_gx = 0;
            for (std::int64_t r = 0; r < rows; ++r) {
              const Real xhat = (xv[r * d + c] - mean[c]) * rstd[c];
              const Real g = gy[r * d + c];
              sum_g += g;
              sum_gx += g * xhat;
              sum_d += g * gv[c];
              sum_dx += g * gv[c] * xhat;
            }
            if (gamma.requires_grad()) gamma.grad()[c] += sum_gx;
            if (beta.requires_grad()) beta.grad()[c] += sum_g;
            if (!x.requires_grad()) continue;
            auto gx = x.grad();
            if (training) {
              const Real inv_n = Real(1) / static_cast<Real>(rows);
              for (std::int64_t r = 0; r < rows; ++r) {
                const Real xhat = (xv[r * d + c] - mean[c]) * rstd[c];
                const Real dxhat = gy[r * d + c] * gv[c];
                gx[r * d + c] += rstd[c] * (dxhat - inv_n * sum_d - xhat * inv_n * sum_dx);
              }
            } else {
              for (std::int64_t r = 0; r < rows; ++r) {
                gx[r * d + c] += gy[r * d + c] * gv[c] * rstd[c];
              }
            }
          }
        });
  }
  return y;
}

// ---------------------------------------------------------------------------

namespace {

struct AxisTaps {
  std::vector<std::int64_t> lo, hi;
  std::vector<double> frac;
};

AxisTaps resize_taps(std::int64_t in, std::int64_t out) {
  AxisTaps t;
  t.lo.resize(out);
  t.hi.resize(out);
  t.frac.resize(out);
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  for (std::int64_t i = 0; i < out; ++i) {
    double src = (static_cast<double>(i) + 0.5) * ratio - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const auto lo = static_cast<std::int64_t>(std::floor(src));
    t.lo[i] = lo;
    t.hi[i] = std::min(lo + 1, in - 1);
    t.frac[i] = src - static_cast<double>(lo);
  }
  return t;
}

}  // namespace

template <class Real>
Tensor<Real> bilinear_resize(const Tensor<Real>& x, std::int64_t out_h, std::int64_t out_w) {
  if (out_h < 1 || out_w < 1) throw DimensionError("bilinear_resize: output extent < 1");
  const auto s = detail::spatial_dims(x.shape(), "bilinear_resize");
  const auto ty = resize_taps(s.h, out_h);
  const auto tx = resize_taps(s.w, out_w);
  Tensor<Real> y(detail::spatial_shape(s, out_h, out_w, s.c));
  auto xv = x.values();
  auto yv = y.values();
  const auto C = s.c;
  for (std::int64_t n = 0; n < s.n; ++n) {
    const Real* src = xv.data() + n * s.h * s.w * C;
    Real* dst = yv.data() + n * out_h * out_w * C;
    for (std::int64_t i = 0; i < out_h; ++i) {
      const Real fy = static_cast<Real>(ty.frac[i]);
      const Real* r0 = src + ty.lo[i] * s.w * C;
      const Real* r1 = src + ty.hi[i] * s.w * C;
      for (std::int64_t j = 0; j < out_w; ++j) {
        const Real fx = static_cast<Real>(tx.frac[j]);
        const Real* a = r0 + tx.lo[j] * C;
        const Real* b = r0 + tx.hi[j] * C;
        const Real* c = r1 + tx.lo[j] * C;
        const Real* d = r1 + tx.hi[j] * C;
        Real* o = dst + (i * out_w + j) * C;
        for (std::int64_t k = 0; k < C; ++k) {
          const Real top = a[k] * (Real(1) - fx) + b[k] * fx;
          const Real bot = c[k] * (Real(1) - fx) + d[k] * fx;
          o[k] = top * (Real(1) - fy) + bot * fy;
        }
      }
    }
  }
  FlopCounter::add(8.0 * static_cast<double>(s.n * out_h * out_w * C));
  if (wants_grad<Real>({&x})) {
    record<Real>(OpKind::kBilinearResize, {x}, y, [x, y, s, ty, tx, out_h, out_w]() mutable {
      auto gx = x.grad();
      auto gy = y.grad();
      const auto C = s.c;
      for (std::int64_t n = 0; n < s.n; ++n) {
        Real* src = gx.data() + n * s.h * s.w * C;
        const Real* dst = gy.data() + n * out_h * out_w * C;
        for (std::int64_t i = 0; i < out_h; ++i) {
          const Real fy = static_cast<Real>(ty.frac[i]);
          Real* r0 = src + ty.lo[i] * s.w * C;
          Real* r1 = src + ty.hi[i] * s.w * C;
          for (std::int64_t j = 0; j < out_w; ++j) {
            const Real fx = static_cast<Real>(tx.frac[j]);
            const Real* g = dst + (i * out_w + j) * C;
            Real* a = r0 + tx.lo[j] * C;
            Real* b = r0 + tx.hi[j] * C;
            Real* c = r1 + tx.lo[j] * C;
            Real* d = r1 + tx.hi[j] * C;
            for (std::int64_t k = 0; k < C; ++k) {
              a[k] += g[k] * (Real(1) - fx) * (Real(1) - fy);
              b[k] += g[k] * fx * (Real(1) - fy);
              c[k] += g[k] * (Real(1) - fx) * fy;
              d[k] += g[k] * fx * fy;
            }
          }
        }
      }
    });
  }
  return y;
}

// ---------------------------------------------------------------------------
// Spatial re-indexing ops share one shape: out[n, i, j, :] = in[n, map(i, j), :]
// with an optional "no source" marker (-1) for zero padding.

namespace {

template <class Real>
Tensor<Real> gather_pixels(const Tensor<Real>& x, const detail::Spatial& s, Shape out_shape,
                           std::int64_t out_pixels_per_image, std::vector<std::int64_t> source,
                           OpKind kind) {
  // source[p] indexes a pixel inside the same image, or -1.
  Tensor<Real> y(std::move(out_shape));
  auto xv = x.values();
  auto yv = y.values();
  const auto C = s.c;
  const auto in_pixels = s.h * s.w;
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t p = 0; p < out_pixels_per_image; ++p) {
      const auto src = source[p];
      if (src < 0) continue;
      std::copy_n(xv.data() + (n * in_pixels + src) * C, C,
                  yv.data() + (n * out_pixels_per_image + p) * C);
    }
  }
  if (wants_grad<Real>({&x})) {
    record<Real>(kind, {x}, y,
                 [x, y, source = std::move(source), n_img = s.n, C, in_pixels,
                  out_pixels_per_image]() mutable {
                   auto gx = x.grad();
                   auto gy = y.grad();
                   for (std::int64_t n = 0; n < n_img; ++n) {
                     for (std::int64_t p = 0; p < out_pixels_per_image; ++p) {
                       const auto src = source[p];
                       if (src < 0) continue;
                       Real* dst = gx.data() + (n * in_pixels + src) * C;
                       const Real* g = gy.data() + (n * out_pixels_per_image + p) * C;
                       for (std::int64_t k = 0; k < C; ++k) dst[k] += g[k];
                     }
                   }
                 });
  }
  return y;
}

}  // namespace

template <class Real>
Tensor<Real> pad2d(const Tensor<Real>& x, std::int64_t bottom, std::int64_t right, PadMode mode) {
  if (bottom < 0 || right < 0) throw DimensionError("pad2d: negative padding");
  const auto s = detail::spatial_dims(x.shape(), "pad2d");
  const auto oh = s.h + bottom;
  const auto ow = s.w + right;
  std::vector<std::int64_t> source(static_cast<std::size_t>(oh * ow));
  for (std::int64_t i = 0; i < oh; ++i) {
    for (std::int64_t j = 0; j < ow; ++j) {
      std::int64_t src = -1;
      if (i < s.h && j < s.w) {
        src = i * s.w + j;
      } else if (mode == PadMode::kReplicate) {
        src = std::min(i, s.h - 1) * s.w + std::min(j, s.w - 1);
      }
      source[i * ow + j] = src;
    }
  }
  return gather_pixels(x, s, detail::spatial_shape(s, oh, ow, s.c), oh * ow, std::move(source),
                       OpKind::kPad);
}

template <class Real>
Tensor<Real> crop2d(const Tensor<Real>& x, std::int64_t h, std::int64_t w) {
  const auto s = detail::spatial_dims(x.shape(), "crop2d");
  if (h < 1 || w < 1 || h > s.h || w > s.w) {
    throw DimensionError("crop2d: cannot crop " + shape_string(x.shape()) + " to " +
                         std::to_string(h) + "x" + std::to_string(w));
  }
  std::vector<std::int64_t> source(static_cast<std::size_t>(h * w));
  for (std::int64_t i = 0; i < h; ++i) {
    for (std::int64_t j = 0; j < w; ++j) source[i * w + j] = i * s.w + j;
  }
  return gather_pixels(x, s, detail::spatial_shape(s, h, w, s.c), h * w, std::move(source),
                       OpKind::kCrop);
}

template <class Real>
Tensor<Real> flip_horizontal(const Tensor<Real>& x) {
  const auto s = detail::spatial_dims(x.shape(), "flip_horizontal");
  std::vector<std::int64_t> source(static_cast<std::size_t>(s.h * s.w));
  for (std::int64_t i = 0; i < s.h; ++i) {
    for (std::int64_t j = 0; j < s.w; ++j) source[i * s.w + j] = i * s.w + (s.w - 1 - j);
  }
  return gather_pixels(x, s, x.shape(), s.h * s.w, std::move(source), OpKind::kFlip);
}

// ---------------------------------------------------------------------------

template <class Real>
Tensor<Real> concat_channels(std::span<const Tensor<Real>> parts) {
  if (parts.empty()) throw DimensionError("concat_channels: no inputs");
  Shape lead = parts.front().shape();
  lead.pop_back();
  std::int64_t total = 0;
  std::vector<std::int64_t> widths;
  for (const auto& p : parts) {
    Shape l = p.shape();
    widths.push_back(l.back());
    total += l.back();
    l.pop_back();
    if (l != lead) throw DimensionError("concat_channels: leading extents differ");
  }
  const auto rows = shape_numel(lead);
  Shape out_shape = lead;
  out_shape.push_back(total);
  Tensor<Real> y(out_shape);
  auto yv = y.values();
  std::int64_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto pv = parts[k].values();
    const auto w = widths[k];
    for (std::int64_t r = 0; r < rows; ++r) {
      std::copy_n(pv.data() + r * w, w, yv.data() + r * total + offset);
    }
    offset += w;
  }
  bool grad = false;
  if (active_tape<Real>() != nullptr) {
    for (const auto& p : parts) grad = grad || p.requires_grad();
  }
  if (grad) {
    std::vector<Tensor<Real>> inputs(parts.begin(), parts.end());
    record<Real>(OpKind::kConcat, inputs, y, [inputs, y, widths, rows, total]() mutable {
      auto gy = y.grad();
      std::int64_t offset = 0;
      for (std::size_t k = 0; k < inputs.size(); ++k) {
        const auto w = widths[k];
        if (inputs[k].requires_grad()) {
          auto g = inputs[k].grad();
          for (std::int64_t r = 0; r < rows; ++r) {
            for (std::int64_t i = 0; i < w; ++i) g[r * w + i] += gy[r * total + offset + i];
          }
        }
        offset += w;
      }
    });
  }
  return y;
}

template <class Real>
Tensor<Real> reshape(const Tensor<Real>& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: " + shape_string(x.shape()) + " -> " + shape_string(shape));
  }
  Tensor<Real> y(std::move(shape), std::vector<Real>(x.values().begin(), x.values().end()));
  if (wants_grad<Real>({&x})) {
    record<Real>(OpKind::kReshape, {x}, y,
                 [x, y]() mutable { accumulate<Real>(x, y.grad()); });
  }
  return y;
}

template <class Real>
Tensor<Real> patchify(const Tensor<Real>& x, std::int64_t patch) {
  const auto s = detail::spatial_dims(x.shape(), "patchify");
  if (patch < 1 || s.h % patch != 0 || s.w % patch != 0) {
    throw ConfigError("patchify: extents " + shape_string(x.shape()) +
                      " not divisible by patch size " + std::to_string(patch));
  }
  const auto oh = s.h / patch, ow = s.w / patch;
  const auto depth = patch * patch * s.c;
  Tensor<Real> y(detail::spatial_shape(s, oh, ow, depth));
  // index[o] = flat source offset within one image for output element o.
  std::vector<std::int64_t> index(static_cast<std::size_t>(oh * ow * depth));
  for (std::int64_t i = 0; i < oh; ++i) {
    for (std::int64_t j = 0; j < ow; ++j) {
      for (std::int64_t py = 0; py < patch; ++py) {
        for (std::int64_t px = 0; px < patch; ++px) {
          for (std::int64_t c = 0; c < s.c; ++c) {
            const auto o = ((i * ow + j) * patch * patch + py * patch + px) * s.c + c;
            index[o] = ((i * patch + py) * s.w + (j * patch + px)) * s.c + c;
          }
        }
      }
    }
  }
  auto xv = x.values();
  auto yv = y.values();
  const auto per_image = s.h * s.w * s.c;
  const auto per_out = static_cast<std::int64_t>(index.size());
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t o = 0; o < per_out; ++o) yv[n * per_out + o] = xv[n * per_image + index[o]];
  }
  if (wants_grad<Real>({&x})) {
    record<Real>(OpKind::kPatchify, {x}, y,
                 [x, y, index = std::move(index), n_img = s.n, per_image, per_out]() mutable {
                   auto gx = x.grad();
                   auto gy = y.grad();
                   for (std::int64_t n = 0; n < n_img; ++n) {
                     for (std::int64_t o = 0; o < per_out; ++o) {
                       gx[n * per_image + index[o]] += gy[n * per_out + o];
                     }
                   }
                 });
  }
  return y;
}

template <class Real>
Tensor<Real> merge_neighbors(const Tensor<Real>& x) {
  const auto s = detail::spatial_dims(x.shape(), "merge_neighbors");
  if (s.h % 2 != 0 || s.w % 2 != 0) {
    throw DimensionError("merge_neighbors: odd extents " + shape_string(x.shape()));
  }
  const auto oh = s.h / 2, ow = s.w / 2;
  const auto C = s.c;
  Tensor<Real> y(detail::spatial_shape(s, oh, ow, 4 * C));
  constexpr std::int64_t kDy[4] = {0, 1, 0, 1};
  constexpr std::int64_t kDx[4] = {0, 0, 1, 1};
  std::vector<std::int64_t> index(static_cast<std::size_t>(oh * ow * 4 * C));
  for (std::int64_t i = 0; i < oh; ++i) {
    for (std::int64_t j = 0; j < ow; ++j) {
      for (int q = 0; q < 4; ++q) {
        for (std::int64_t c = 0; c < C; ++c) {
          const auto o = ((i * ow + j) * 4 + q) * C + c;
          index[o] = ((2 * i + kDy[q]) * s.w + (2 * j + kDx[q])) * C + c;
        }
      }
    }
  }
  auto xv = x.values();
  auto yv = y.values();
  const auto per_image = s.h * s.w * C;
  const auto per_out = static_cast<std::int64_t>(index.size());
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t o = 0; o < per_out; ++o) yv[n * per_out + o] = xv[n * per_image + index[o]];
  }
  if (wants_grad<Real>({&x})) {
    record<Real>(OpKind::kMergeNeighbors, {x}, y,
                 [x, y, index = std::move(index), n_img = s.n, per_image, per_out]() mutable {
                   auto gx = x.grad();
                   auto gy = y.grad();
                   for (std::int64_t n = 0; n < n_img; ++n) {
                     for (std::int64_t o = 0; o < per_out; ++o) {
                       gx[n * per_image + index[o]] += gy[n * per_out + o];
                     }
                   }
                 });
  }
  return y;
}

// ---------------------------------------------------------------------------

template <class Real>
Tensor<Real> cross_entropy(const Tensor<Real>& logits, std::span<const std::uint8_t> labels) {
  const auto K = last_dim(logits.shape(), "cross_entropy");
  const auto rows = logits.numel() / K;
  if (static_cast<std::int64_t>(labels.size()) != rows) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(rows) + " positions");
  }
  auto lv = logits.values();
  std::int64_t count = 0;
  double total = 0;
  for (std::int64_t r = 0; r < rows; ++r) {
    const auto label = labels[r];
    if (label == kIgnoreLabel) continue;
    if (label >= K) {
      throw DataError("cross_entropy: label " + std::to_string(label) + " outside [0," +
                      std::to_string(K) + ")");
    }
    const Real* row = lv.data() + r * K;
    double mx = row[0];
    for (std::int64_t k = 1; k < K; ++k) mx = std::max(mx, static_cast<double>(row[k]));
    double z = 0;
    for (std::int64_t k = 0; k < K; ++k) z += std::exp(row[k] - mx);
    total += (std::log(z) + mx) - row[label];
    ++count;
  }
  auto loss = Tensor<Real>::scalar(count > 0 ? static_cast<Real>(total / count) : Real(0));
  if (wants_grad<Real>({&logits})) {
    std::vector<std::uint8_t> kept(labels.begin(), labels.end());
    record<Real>(OpKind::kCrossEntropy, {logits}, loss,
                 [logits, loss, kept = std::move(kept), K, rows, count]() mutable {
                   if (count == 0) return;
                   auto gl = logits.grad();
                   auto lv = logits.values();
                   const Real g = loss.grad()[0] / static_cast<Real>(count);
                   for (std::int64_t r = 0; r < rows; ++r) {
                     const auto label = kept[r];
                     if (label == kIgnoreLabel) continue;
                     const Real* row = lv.data() + r * K;
                     Real mx = row[0];
                     for (std::int64_t k = 1; k < K; ++k) mx = std::max(mx, row[k]);
                     Real z = 0;
                     for (std::int64_t k = 0; k < K; ++k) z += std::exp(row[k] - mx);
                     Real* out = gl.data() + r * K;
                     for (std::int64_t k = 0; k < K; ++k) {
                       const Real p = std::exp(row[k] - mx) / z;
                       out[k] += g * (p - (k == label ? Real(1) : Real(0)));
                     }
                   }
                 });
  }
  return loss;
}

template <class Real>
Tensor<Real> sum(const Tensor<Real>& x) {
  double total = 0;
  for (auto v : x.values()) total += v;
  auto y = Tensor<Real>::scalar(static_cast<Real>(total));
  if (wants_grad<Real>({&x})) {
    record<Real>(OpKind::kSum, {x}, y, [x, y]() mutable {
      const Real g = y.grad()[0];
      for (auto& v : x.grad()) v += g;
    });
  }
  return y;
}

template <class Real>
void ensure_finite(const Tensor<Real>& x, const char* what) {
  for (auto v : x.values()) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite value in ") + what);
  }
}

#define MSWIN_INSTANTIATE_OPS(Real)                                                              \
  template Tensor<Real> linear(const Tensor<Real>&, const Tensor<Real>&, const Tensor<Real>&);  \
  template Tensor<Real> add(const Tensor<Real>&, const Tensor<Real>&);                          \
  template Tensor<Real> add_n(std::span<const Tensor<Real>>);                                   \
  template Tensor<Real> mul(const Tensor<Real>&, const Tensor<Real>&);                          \
  template Tensor<Real> scale(const Tensor<Real>&, Real);                                       \
  template Tensor<Real> relu(const Tensor<Real>&);                                              \
  template Tensor<Real> gelu(const Tensor<Real>&);                                              \
  template Tensor<Real> softmax(const Tensor<Real>&, int);                                      \
  template Tensor<Real> layer_norm(const Tensor<Real>&, const Tensor<Real>&,                    \
                                   const Tensor<Real>&, double);                                \
  template Tensor<Real> batch_norm(const Tensor<Real>&, const Tensor<Real>&,                    \
                                   const Tensor<Real>&, BatchNormStats<Real>&, bool);           \
  template Tensor<Real> bilinear_resize(const Tensor<Real>&, std::int64_t, std::int64_t);       \
  template Tensor<Real> pad2d(const Tensor<Real>&, std::int64_t, std::int64_t, PadMode);        \
  template Tensor<Real> crop2d(const Tensor<Real>&, std::int64_t, std::int64_t);                \
  template Tensor<Real> flip_horizontal(const Tensor<Real>&);                                   \
  template Tensor<Real> concat_channels(std::span<const Tensor<Real>>);                         \
  template Tensor<Real> reshape(const Tensor<Real>&, Shape);                                    \
  template Tensor<Real> patchify(const Tensor<Real>&, std::int64_t);                            \
  template Tensor<Real> merge_neighbors(const Tensor<Real>&);                                   \
  template Tensor<Real> cross_entropy(const Tensor<Real>&, std::span<const std::uint8_t>);      \
  template Tensor<Real> sum(const Tensor<Real>&);                                               \
  template void ensure_finite(const Tensor<Real>&, const char*);

MSWIN_INSTANTIATE_OPS(float)
MSWIN_INSTANTIATE_OPS(double)

}  // namespace mswin
