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

// Internal helpers shared by the op implementations.

#include <functional>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mswin/error.hpp"
#include "mswin/tensor.hpp"

namespace mswin::detail {

template <class Real>
using RowMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Real>
using MatrixMap = Eigen::Map<RowMatrix<Real>>;
template <class Real>
using ConstMatrixMap = Eigen::Map<const RowMatrix<Real>>;

template <class Real>
bool wants_grad(std::initializer_list<const Tensor<Real>*> inputs) {
  if (active_tape<Real>() == nullptr) return false;
  for (const auto* t : inputs) {
    if (t != nullptr && t->defined() && t->requires_grad()) return true;
  }
  return false;
}

template <class Real>
void record(OpKind kind, std::vector<Tensor<Real>> inputs, Tensor<Real>& output,
            std::function<void()> backward) {
  output.set_requires_grad(true);
  active_tape<Real>()->record(kind, std::move(inputs), output, std::move(backward));
}

// [H, W, C] is treated as a batch of one.
struct Spatial {
  std::int64_t n, h, w, c;
  bool batched;
};

inline Spatial spatial_dims(const Shape& s, const char* op) {
  if (s.size() == 3) return {1, s[0], s[1], s[2], false};
  if (s.size() == 4) return {s[0], s[1], s[2], s[3], true};
  throw DimensionError(std::string(op) + ": expected [H,W,C] or [N,H,W,C], got " +
                       shape_string(s));
}

inline Shape spatial_shape(const Spatial& like, std::int64_t h, std::int64_t w, std::int64_t c) {
  if (like.batched) return {like.n, h, w, c};
  return {h, w, c};
}

}  // namespace mswin::detail
