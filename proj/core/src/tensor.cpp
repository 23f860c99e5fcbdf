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

#include "mswin/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <utility>

#include "mswin/error.hpp"

namespace mswin {

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto e : shape) {
    if (e <= 0) throw DimensionError("non-positive extent in shape " + shape_string(shape));
    n *= e;
  }
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

template <class Real>
Tensor<Real>::Tensor(Shape shape, Real fill) : impl_(std::make_shared<Impl>()) {
  const auto n = shape_numel(shape);
  impl_->shape = std::move(shape);
  impl_->value.assign(static_cast<std::size_t>(n), fill);
}

template <class Real>
Tensor<Real>::Tensor(Shape shape, std::vector<Real> values) : impl_(std::make_shared<Impl>()) {
  const auto n = shape_numel(shape);
  if (static_cast<std::int64_t>(values.size()) != n) {
    throw DimensionError("value count " + std::to_string(values.size()) + " does not match shape " +
                         shape_string(shape));
  }
  impl_->shape = std::move(shape);
  impl_->value = std::move(values);
}

template <class Real>
const Shape& Tensor<Real>::shape() const {
  if (!impl_) throw DimensionError("use of undefined tensor");
  return impl_->shape;
}

template <class Real>
std::int64_t Tensor<Real>::dim(int axis) const {
  const int r = rank();
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " +
                         shape_string(shape()));
  }
  return impl_->shape[static_cast<std::size_t>(a)];
}

template <class Real>
std::int64_t Tensor<Real>::numel() const {
  return static_cast<std::int64_t>(impl_ ? impl_->value.size() : 0);
}

template <class Real>
std::span<Real> Tensor<Real>::values() const {
  if (!impl_) throw DimensionError("use of undefined tensor");
  return impl_->value;
}

template <class Real>
Real Tensor<Real>::item() const {
  if (numel() != 1) throw DimensionError("item() on tensor of shape " + shape_string(shape()));
  return impl_->value[0];
}

template <class Real>
bool Tensor<Real>::requires_grad() const {
  return impl_ && impl_->requires_grad;
}

template <class Real>
Tensor<Real>& Tensor<Real>::set_requires_grad(bool on) {
  if (!impl_) throw DimensionError("use of undefined tensor");
  impl_->requires_grad = on;
  return *this;
}

template <class Real>
bool Tensor<Real>::has_grad() const {
  return impl_ && !impl_->grad.empty();
}

template <class Real>
std::span<Real> Tensor<Real>::grad() const {
  if (!impl_) throw DimensionError("use of undefined tensor");
  if (impl_->grad.empty()) impl_->grad.assign(impl_->value.size(), Real(0));
  return impl_->grad;
}

template <class Real>
void Tensor<Real>::zero_grad() const {
  if (impl_ && !impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), Real(0));
}

template <class Real>
void Tensor<Real>::clear_grad() const {
  if (impl_) {
    impl_->grad.clear();
    impl_->grad.shrink_to_fit();
  }
}

template <class Real>
Tensor<Real> Tensor<Real>::clone() const {
  if (!impl_) return {};
  return Tensor(impl_->shape, impl_->value);
}

template class Tensor<float>;
template class Tensor<double>;

// ---------------------------------------------------------------------------

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kLinear: return "linear";
    case OpKind::kAdd: return "add";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kRelu: return "relu";
    case OpKind::kGelu: return "gelu";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kLayerNorm: return "layer_norm";
    case OpKind::kBatchNorm: return "batch_norm";
    case OpKind::kBilinearResize: return "bilinear_resize";
    case OpKind::kPad: return "pad";
    case OpKind::kCrop: return "crop";
    case OpKind::kCyclicShift: return "cyclic_shift";
    case OpKind::kWindowPartition: return "window_partition";
    case OpKind::kWindowReverse: return "window_reverse";
    case OpKind::kConcat: return "concat";
    case OpKind::kReshape: return "reshape";
    case OpKind::kPatchify: return "patchify";
    case OpKind::kMergeNeighbors: return "merge_neighbors";
    case OpKind::kFlip: return "flip";
    case OpKind::kWindowAttention: return "window_attention";
    case OpKind::kCrossEntropy: return "cross_entropy";
    case OpKind::kSum: return "sum";
  }
  return "unknown";
}

OpCategory op_category(OpKind kind) {
  switch (kind) {
    case OpKind::kLinear: return OpCategory::kLinear;
    case OpKind::kLayerNorm:
    case OpKind::kBatchNorm: return OpCategory::kNorm;
    case OpKind::kRelu:
    case OpKind::kGelu:
    case OpKind::kSoftmax: return OpCategory::kActivation;
    case OpKind::kWindowAttention: return OpCategory::kAttention;
    case OpKind::kBilinearResize: return OpCategory::kResize;
    case OpKind::kPad:
    case OpKind::kCrop:
    case OpKind::kCyclicShift:
    case OpKind::kWindowPartition:
    case OpKind::kWindowReverse:
    case OpKind::kConcat:
    case OpKind::kReshape:
    case OpKind::kPatchify:
    case OpKind::kMergeNeighbors:
    case OpKind::kFlip: return OpCategory::kReshape;
    case OpKind::kAdd:
    case OpKind::kMul:
    case OpKind::kScale:
    case OpKind::kSum: return OpCategory::kArithmetic;
    case OpKind::kCrossEntropy: return OpCategory::kLoss;
  }
  return OpCategory::kArithmetic;
}

std::string_view category_name(OpCategory category) {
  switch (category) {
    case OpCategory::kLinear: return "linear";
    case OpCategory::kNorm: return "norm";
    case OpCategory::kActivation: return "activation";
    case OpCategory::kAttention: return "attention";
    case OpCategory::kResize: return "resize";
    case OpCategory::kReshape: return "reshape";
    case OpCategory::kArithmetic: return "arithmetic";
    case OpCategory::kLoss: return "loss";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------

namespace {
thread_local std::vector<std::string> scope_stack;
thread_local FlopCounter* active_counter = nullptr;
}  // namespace

NamedScope::NamedScope(std::string name) { scope_stack.push_back(std::move(name)); }
NamedScope::~NamedScope() { scope_stack.pop_back(); }

std::string current_scope() {
  std::string out;
  for (const auto& s : scope_stack) {
    if (!out.empty()) out += '/';
    out += s;
  }
  return out;
}

// ---------------------------------------------------------------------------

template <class Real>
void Tape<Real>::record(OpKind kind, std::vector<Tensor<Real>> inputs, Tensor<Real> output,
                        std::function<void()> backward) {
  nodes_.push_back(TapeNode<Real>{kind, current_scope(), std::move(inputs), std::move(output),
                                  std::move(backward)});
}

template <class Real>
void Tape<Real>::backward(Tensor<Real> loss) {
  if (loss.numel() != 1) {
    throw DimensionError("backward() needs a single-element loss, got " +
                         shape_string(loss.shape()));
  }
  loss.grad()[0] += Real(1);
  backward_order_.clear();
  backward_order_.reserve(nodes_.size());
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    auto& node = nodes_[i];
    backward_order_.push_back(i);
    if (!node.output.has_grad()) continue;
    node.backward();
  }
}

template <class Real>
void Tape<Real>::clear() {
  nodes_.clear();
  backward_order_.clear();
}

namespace {
template <class Real>
Tape<Real>*& tape_slot() noexcept {
  thread_local Tape<Real>* tape = nullptr;
  return tape;
}
}  // namespace

template <class Real>
Tape<Real>* active_tape() noexcept {
  return tape_slot<Real>();
}

template <class Real>
TapeGuard<Real>::TapeGuard(Tape<Real>& tape) : previous_(tape_slot<Real>()) {
  tape_slot<Real>() = &tape;
}

template <class Real>
TapeGuard<Real>::~TapeGuard() {
  tape_slot<Real>() = previous_;
}

template Tape<float>* active_tape<float>() noexcept;
template Tape<double>* active_tape<double>() noexcept;
template class Tape<float>;
template class Tape<double>;
template class TapeGuard<float>;
template class TapeGuard<double>;

// ---------------------------------------------------------------------------

FlopCounter::FlopCounter() : previous_(active_counter) { active_counter = this; }
FlopCounter::~FlopCounter() { active_counter = previous_; }

double FlopCounter::total() const {
  double t = 0;
  for (const auto& [_, v] : by_scope_) t += v;
  return t;
}

void FlopCounter::add(double flops) {
  if (!active_counter) return;
  const std::string key = scope_stack.empty() ? std::string() : scope_stack.front();
  active_counter->by_scope_[key] += flops;
}

}  // namespace mswin
