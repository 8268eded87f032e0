/* SPDX-FileCopyrightText: 2026 ssdnet Authors
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssdnet/common.hpp"
#include "ssdnet/rng.hpp"

namespace ssdnet {

class Tape;

namespace detail {

struct TensorImpl {
  Shape shape;
  std::vector<real> data;
  bool requires_grad = false;
  std::vector<real> grad;  // empty means absent
  Tape* tape = nullptr;    // registration on the currently active tape
  int node = -1;
  // Single-element tensors additionally carry their value in double: full
  // reductions and scalar arithmetic maintain it, so loss values can be read
  // without the storage rounding of `real`.
  double exact = 0.0;
  bool has_exact = false;

  std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
  void ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), real(0));
  }
  void set_exact(double v) {
    exact = v;
    has_exact = true;
  }
  double scalar_as_double() const { return has_exact ? exact : static_cast<double>(data[0]); }
};

}  // namespace detail

// Dense row-major tensor of `real`. Value type with shared storage: copies
// alias the same buffer. Data is immutable once a tensor participates in a
// taped forward pass; gradients accumulate into `grad` during backward.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(const Shape& shape);
  static Tensor ones(const Shape& shape);
  static Tensor full(const Shape& shape, real value);
  static Tensor from_values(const Shape& shape, std::vector<real> values);
  static Tensor uniform(const Shape& shape, std::uint64_t seed, double lo, double hi);
  static Tensor normal(const Shape& shape, std::uint64_t seed, double mean, double stddev);
  static Tensor scalar(real value) { return from_values({1}, {value}); }

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int rank() const { return static_cast<int>(impl_->shape.size()); }
  std::int64_t numel() const { return impl_->numel(); }
  std::int64_t extent(int axis) const { return impl_->shape[static_cast<std::size_t>(axis)]; }

  std::span<const real> data() const { return impl_->data; }
  // Direct mutation is only legal for tensors not currently on a tape
  // (leaves between steps, test setup).
  std::span<real> mutable_data();

  bool requires_grad() const { return impl_->requires_grad; }
  Tensor& set_requires_grad(bool v);

  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const real> grad() const;
  void zero_grad() { impl_->grad.clear(); }

  real item() const;
  // Scalar value at double precision where a reduction/scalar chain
  // maintained one; falls back to the stored value.
  double item_double() const;

  // Deep copy; the clone starts off-tape with no gradient.
  Tensor clone() const;

  bool on_tape() const { return impl_->tape != nullptr; }

  std::shared_ptr<detail::TensorImpl> impl() const { return impl_; }
  static Tensor wrap(std::shared_ptr<detail::TensorImpl> impl);

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

// Explicit per-forward-pass record of differentiable operations. Ops append
// to the tape installed by a TapeScope; without a scope they run
// forward-only. A tape and its tensors belong to one worker at a time.
class Tape {
 public:
  Tape() = default;
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Reverse-mode sweep from a scalar root. Populates grad on every
  // grad-requiring node reachable from the root; each recorded operation is
  // visited exactly once, in reverse topological order.
  void backward(const Tensor& root);

  std::size_t op_count() const { return ops_.size(); }
  std::size_t node_count() const { return nodes_.size(); }

  // -- recording interface (used by op implementations) --
  int ensure_node(const std::shared_ptr<detail::TensorImpl>& t);
  void record(std::vector<int> inputs, int output, std::function<void()> pull);

 private:
  struct OpRecord {
    std::vector<int> inputs;
    int output = -1;
    std::function<void()> pull;
  };
  std::vector<std::shared_ptr<detail::TensorImpl>> nodes_;
  std::vector<OpRecord> ops_;
};

// RAII installation of the active tape for the current thread.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape();

// Scalar-root backward through the tape the root lives on.
void backward(const Tensor& root);

// ---- primitive operations ----

enum class Ew { Add, Sub, Mul, Div, Relu, Sigmoid, Exp, Sqrt, Neg };

Tensor elementwise(Ew kind, const Tensor& a);
Tensor elementwise(Ew kind, const Tensor& a, const Tensor& b);

inline Tensor add(const Tensor& a, const Tensor& b) { return elementwise(Ew::Add, a, b); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(Ew::Sub, a, b); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(Ew::Mul, a, b); }
inline Tensor div(const Tensor& a, const Tensor& b) { return elementwise(Ew::Div, a, b); }
inline Tensor relu(const Tensor& a) { return elementwise(Ew::Relu, a); }
inline Tensor sigmoid(const Tensor& a) { return elementwise(Ew::Sigmoid, a); }
inline Tensor exp(const Tensor& a) { return elementwise(Ew::Exp, a); }
inline Tensor sqrt(const Tensor& a) { return elementwise(Ew::Sqrt, a); }
inline Tensor neg(const Tensor& a) { return elementwise(Ew::Neg, a); }

// Rank 2 or 3 on both sides; rank 3 treats the leading extent as a batch.
Tensor matmul(const Tensor& a, const Tensor& b);

enum class Reduce { Sum, Mean, Max };

// axis < 0 reduces over all elements. `keep` retains the reduced axis as 1.
Tensor reduce(Reduce kind, const Tensor& t, int axis = -1, bool keep = false);

inline Tensor reduce_sum(const Tensor& t, int axis = -1, bool keep = false) {
  return reduce(Reduce::Sum, t, axis, keep);
}
inline Tensor reduce_mean(const Tensor& t, int axis = -1, bool keep = false) {
  return reduce(Reduce::Mean, t, axis, keep);
}
inline Tensor reduce_max(const Tensor& t, int axis = -1, bool keep = false) {
  return reduce(Reduce::Max, t, axis, keep);
}

// Max-subtracted softmax along `axis`; slices sum to 1.
Tensor softmax(const Tensor& t, int axis);

Tensor reshape(const Tensor& t, const Shape& shape);
Tensor slice(const Tensor& t, int axis, std::int64_t start, std::int64_t length);
Tensor transpose_last2(const Tensor& t);

// numpy-style right-aligned broadcast of two shapes (extent 1 stretches).
Shape broadcast_shape(const Shape& a, const Shape& b);

namespace detail {

using ImplPtr = std::shared_ptr<TensorImpl>;

ImplPtr make_impl(const Shape& shape);
bool grad_participates(const ImplPtr& t);
// Registers inputs/output on the active tape and stores the backward closure
// when any input participates in differentiation. No-op without a tape.
void maybe_record(const std::vector<ImplPtr>& inputs, const ImplPtr& out,
                  std::function<void()> pull);

// Geometry of slices along one axis of a row-major tensor.
struct SliceIter {
  std::int64_t count;
  std::int64_t len;
  std::int64_t stride;
  std::int64_t outer;
  std::int64_t block;
};
SliceIter slice_iter(const Shape& shape, int axis);
inline std::int64_t slice_base(const SliceIter& it, std::int64_t s) {
  return (s / it.stride) * it.block + (s % it.stride);
}
void check_axis(const Shape& shape, int axis);

}  // namespace detail

}  // namespace ssdnet
