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
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mswin {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major tensor handle. Copies share storage (like a
// reference-counted buffer) and constness is shallow, as for a shared_ptr:
// a const handle still exposes mutable values. Use clone() for a deep copy.
// The gradient slot is allocated on first access and matches the value shape.
template <class Real>
class Tensor {
 public:
  using value_type = Real;

  Tensor() = default;
  explicit Tensor(Shape shape, Real fill = Real(0));
  Tensor(Shape shape, std::vector<Real> values);

  static Tensor scalar(Real value) { return Tensor(Shape{}, std::vector<Real>{value}); }

  bool defined() const noexcept { return impl_ != nullptr; }

  const Shape& shape() const;
  int rank() const { return static_cast<int>(shape().size()); }
  // Negative axes count from the back.
  std::int64_t dim(int axis) const;
  std::int64_t numel() const;

  std::span<Real> values() const;
  Real item() const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool on = true);

  bool has_grad() const;
  // Zero-initialized on first call.
  std::span<Real> grad() const;
  void zero_grad() const;
  void clear_grad() const;

  Tensor clone() const;
  // Copy of the values, detached from any gradient bookkeeping.
  Tensor detach() const { return clone(); }

  bool same_storage(const Tensor& other) const noexcept { return impl_ == other.impl_; }

 private:
  struct Impl {
    Shape shape;
    std::vector<Real> value;
    std::vector<Real> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> impl_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

// ---------------------------------------------------------------------------
// Operation kinds as recorded on the tape. The category groups them for graph
// audits (e.g. "no convolution anywhere").

enum class OpKind : std::uint8_t {
  kLinear,
  kAdd,
  kMul,
  kScale,
  kRelu,
  kGelu,
  kSoftmax,
  kLayerNorm,
  kBatchNorm,
  kBilinearResize,
  kPad,
  kCrop,
  kCyclicShift,
  kWindowPartition,
  kWindowReverse,
  kConcat,
  kReshape,
  kPatchify,
  kMergeNeighbors,
  kFlip,
  kWindowAttention,
  kCrossEntropy,
  kSum,
};

enum class OpCategory : std::uint8_t {
  kLinear,
  kNorm,
  kActivation,
  kAttention,
  kResize,
  kReshape,
  kArithmetic,
  kLoss,
};

std::string_view op_name(OpKind kind);
OpCategory op_category(OpKind kind);
std::string_view category_name(OpCategory category);

// ---------------------------------------------------------------------------
// Named scopes. A thread-local stack of names shared by the tape (node labels)
// and the FLOP counter (per-module totals).

class NamedScope {
 public:
  explicit NamedScope(std::string name);
  ~NamedScope();
  NamedScope(const NamedScope&) = delete;
  NamedScope& operator=(const NamedScope&) = delete;
};

// "a/b/c" for the current stack, "" when empty.
std::string current_scope();

// ---------------------------------------------------------------------------

template <class Real>
struct TapeNode {
  OpKind kind;
  std::string scope;
  std::vector<Tensor<Real>> inputs;
  Tensor<Real> output;
  std::function<void()> backward;
};

// Define-by-run record of differentiable ops. One tape is owned by exactly one
// thread; install it with TapeGuard. Ops executed without an active tape (or
// on inputs that do not require gradients) are not recorded.
template <class Real>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(OpKind kind, std::vector<Tensor<Real>> inputs, Tensor<Real> output,
              std::function<void()> backward);

  // Seeds d(loss)/d(loss) = 1 and runs every node's rule in exact reverse
  // recording order. `loss` must hold a single element.
  void backward(Tensor<Real> loss);

  std::span<const TapeNode<Real>> nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<std::size_t>& last_backward_order() const { return backward_order_; }
  void clear();

 private:
  std::vector<TapeNode<Real>> nodes_;
  std::vector<std::size_t> backward_order_;
};

template <class Real>
Tape<Real>* active_tape() noexcept;

// Installs a tape as the thread's active tape for its lifetime.
template <class Real>
class TapeGuard {
 public:
  explicit TapeGuard(Tape<Real>& tape);
  ~TapeGuard();
  TapeGuard(const TapeGuard&) = delete;
  TapeGuard& operator=(const TapeGuard&) = delete;

 private:
  Tape<Real>* previous_;
};

extern template class Tape<float>;
extern template class Tape<double>;
extern template class TapeGuard<float>;
extern template class TapeGuard<double>;

// ---------------------------------------------------------------------------
// Runtime FLOP accounting. Ops report their cost while a FlopCounter is alive
// on the current thread; totals are keyed by the outermost scope name.

class FlopCounter {
 public:
  FlopCounter();
  ~FlopCounter();
  FlopCounter(const FlopCounter&) = delete;
  FlopCounter& operator=(const FlopCounter&) = delete;

  double total() const;
  const std::map<std::string, double>& by_scope() const { return by_scope_; }

  static void add(double flops);

 private:
  std::map<std::string, double> by_scope_;
  FlopCounter* previous_;
};

}  // namespace mswin
