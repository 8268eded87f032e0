/* SPDX-FileCopyrightText: 2026 ssdnet Authors
 * SPDX-License-Identifier: Apache-2.0 */

#include "ssdnet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace ssdnet {

namespace {

thread_local Tape* g_active_tape = nullptr;

using Impl = detail::TensorImpl;
using ImplPtr = std::shared_ptr<Impl>;
using detail::make_impl;
using detail::slice_base;
using detail::slice_iter;
using detail::SliceIter;

void validate_shape(const Shape& shape) {
  for (std::int64_t e : shape) {
    if (e < 1) throw ShapeError("tensor shape " + shape_str(shape) + " has a non-positive extent");
  }
}

bool finite(real v) { return std::isfinite(static_cast<double>(v)); }

// Row-major strides, with stride 0 on broadcast axes after left-padding the
// shape with 1s to `rank`.
std::vector<std::int64_t> broadcast_strides(const Shape& shape, int rank) {
  const int r = static_cast<int>(shape.size());
  std::vector<std::int64_t> strides(static_cast<std::size_t>(rank), 0);
  std::int64_t s = 1;
  for (int i = r - 1; i >= 0; --i) {
    strides[static_cast<std::size_t>(rank - r + i)] = (shape[static_cast<std::size_t>(i)] == 1) ? 0 : s;
    s *= shape[static_cast<std::size_t>(i)];
  }
  return strides;
}

// Odometer iteration over `out`, producing offsets into two broadcast
// operands. F is f(out_index, a_offset, b_offset).
template <class F>
void for_each_bcast2(const Shape& out, const Shape& a, const Shape& b, F&& f) {
  const int rank = static_cast<int>(out.size());
  const std::int64_t n = shape_numel(out);
  if (rank == 0 || n == 0) return;
  const auto sa = broadcast_strides(a, rank);
  const auto sb = broadcast_strides(b, rank);
  std::vector<std::int64_t> idx(static_cast<std::size_t>(rank), 0);
  std::int64_t oa = 0, ob = 0;
  for (std::int64_t i = 0;;) {
    f(i, oa, ob);
    if (++i == n) break;
    int ax = rank - 1;
    for (;;) {
      oa += sa[static_cast<std::size_t>(ax)];
      ob += sb[static_cast<std::size_t>(ax)];
      if (++idx[static_cast<std::size_t>(ax)] < out[static_cast<std::size_t>(ax)]) break;
      oa -= sa[static_cast<std::size_t>(ax)] * out[static_cast<std::size_t>(ax)];
      ob -= sb[static_cast<std::size_t>(ax)] * out[static_cast<std::size_t>(ax)];
      idx[static_cast<std::size_t>(ax)] = 0;
      --ax;  // rank>=1 and i<n guarantee ax stays valid
    }
  }
}

using detail::check_axis;

}  // namespace

namespace detail {

ImplPtr make_impl(const Shape& shape) {
  validate_shape(shape);
  auto impl = std::make_shared<Impl>();
  impl->shape = shape;
  impl->data.assign(static_cast<std::size_t>(shape_numel(shape)), real(0));
  return impl;
}

// Iteration geometry for slices along `axis` of `shape`.
SliceIter slice_iter(const Shape& shape, int axis) {
  SliceIter it{};
  std::int64_t inner = 1, outerN = 1;
  const int rank = static_cast<int>(shape.size());
  for (int i = axis + 1; i < rank; ++i) inner *= shape[static_cast<std::size_t>(i)];
  for (int i = 0; i < axis; ++i) outerN *= shape[static_cast<std::size_t>(i)];
  it.len = shape[static_cast<std::size_t>(axis)];
  it.stride = inner;
  it.count = outerN * inner;
  it.outer = outerN;
  it.block = inner * it.len;
  return it;
}

void check_axis(const Shape& shape, int axis) {
  if (axis < 0 || axis >= static_cast<int>(shape.size()))
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + shape_str(shape));
}

}  // namespace detail

// ---- Tensor ----

Tensor Tensor::wrap(std::shared_ptr<detail::TensorImpl> impl) {
  Tensor t;
  t.impl_ = std::move(impl);
  return t;
}

Tensor Tensor::zeros(const Shape& shape) { return wrap(make_impl(shape)); }

Tensor Tensor::ones(const Shape& shape) { return full(shape, real(1)); }

Tensor Tensor::full(const Shape& shape, real value) {
  auto impl = make_impl(shape);
  std::fill(impl->data.begin(), impl->data.end(), value);
  if (impl->numel() == 1) impl->set_exact(static_cast<double>(value));
  return wrap(impl);
}

Tensor Tensor::from_values(const Shape& shape, std::vector<real> values) {
  validate_shape(shape);
  if (static_cast<std::int64_t>(values.size()) != shape_numel(shape))
    throw ShapeError("literal of length " + std::to_string(values.size()) +
                     " does not fill shape " + shape_str(shape));
  auto impl = std::make_shared<Impl>();
  impl->shape = shape;
  impl->data = std::move(values);
  if (impl->numel() == 1) impl->set_exact(static_cast<double>(impl->data[0]));
  return wrap(impl);
}

Tensor Tensor::uniform(const Shape& shape, std::uint64_t seed, double lo, double hi) {
  auto impl = make_impl(shape);
  Rng rng(seed);
  for (auto& v : impl->data) v = static_cast<real>(rng.uniform(lo, hi));
  return wrap(impl);
}

Tensor Tensor::normal(const Shape& shape, std::uint64_t seed, double mean, double stddev) {
  auto impl = make_impl(shape);
  Rng rng(seed);
  for (auto& v : impl->data) v = static_cast<real>(rng.normal(mean, stddev));
  return wrap(impl);
}

std::span<real> Tensor::mutable_data() {
  if (impl_->tape != nullptr)
    throw GraphError("cannot mutate a tensor that is registered on an active tape");
  impl_->has_exact = false;  // direct edits invalidate the double channel
  return impl_->data;
}

Tensor& Tensor::set_requires_grad(bool v) {
  impl_->requires_grad = v;
  return *this;
}

std::span<const real> Tensor::grad() const {
  if (impl_->grad.empty()) throw GraphError("gradient not populated");
  return impl_->grad;
}

real Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() requires a single-element tensor, got " + shape_str(shape()));
  return impl_->data[0];
}

double Tensor::item_double() const {
  if (numel() != 1)
    throw ShapeError("item_double() requires a single-element tensor, got " + shape_str(shape()));
  return impl_->scalar_as_double();
}

Tensor Tensor::clone() const {
  auto impl = std::make_shared<Impl>();
  impl->shape = impl_->shape;
  impl->data = impl_->data;
  impl->requires_grad = impl_->requires_grad;
  impl->exact = impl_->exact;
  impl->has_exact = impl_->has_exact;
  return wrap(impl);
}

// ---- Tape ----

Tape::~Tape() {
  for (auto& n : nodes_) {
    if (n->tape == this) {
      n->tape = nullptr;
      n->node = -1;
    }
  }
}

int Tape::ensure_node(const ImplPtr& t) {
  if (t->tape == this) return t->node;
  t->tape = this;
  t->node = static_cast<int>(nodes_.size());
  nodes_.push_back(t);
  return t->node;
}

void Tape::record(std::vector<int> inputs, int output, std::function<void()> pull) {
  OpRecord rec;
  rec.inputs = std::move(inputs);
  rec.output = output;
  rec.pull = std::move(pull);
  ops_.push_back(std::move(rec));
}

void Tape::backward(const Tensor& root) {
  auto impl = root.impl();
  if (impl->tape != this) throw GraphError("backward: root tensor is not on this tape");
  if (impl->numel() != 1) throw ShapeError("backward: root must be scalar, got " + shape_str(impl->shape));
  impl->ensure_grad();
  impl->grad[0] += real(1);
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
    if (nodes_[static_cast<std::size_t>(it->output)]->grad.empty()) continue;  // not reached from root
    it->pull();
  }
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }

TapeScope::~TapeScope() { g_active_tape = previous_; }

Tape* active_tape() { return g_active_tape; }

void backward(const Tensor& root) {
  if (root.impl()->tape == nullptr) throw GraphError("backward: root tensor is not on any tape");
  root.impl()->tape->backward(root);
}

namespace detail {

// True when the op must be recorded for this input.
bool grad_participates(const ImplPtr& t) {
  Tape* tape = g_active_tape;
  if (tape == nullptr) return false;
  return t->requires_grad || t->tape == tape;
}

// Registers output + backward closure when any input participates.
void maybe_record(const std::vector<ImplPtr>& inputs, const ImplPtr& out,
                  std::function<void()> pull) {
  Tape* tape = g_active_tape;
  if (tape == nullptr) return;
  bool any = false;
  for (const auto& in : inputs)
    if (grad_participates(in)) any = true;
  if (!any) return;
  std::vector<int> ids;
  for (const auto& in : inputs)
    if (grad_participates(in)) ids.push_back(tape->ensure_node(in));
  const int out_id = tape->ensure_node(out);
  out->requires_grad = true;
  tape->record(std::move(ids), out_id, std::move(pull));
}

}  // namespace detail

namespace {
using detail::grad_participates;
using detail::maybe_record;
}  // namespace

// ---- broadcast machinery ----

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const int rank = static_cast<int>(std::max(a.size(), b.size()));
  Shape out(static_cast<std::size_t>(rank), 1);
  for (int i = 0; i < rank; ++i) {
    const std::int64_t ea = (i < static_cast<int>(rank - a.size())) ? 1 : a[static_cast<std::size_t>(i - (rank - static_cast<int>(a.size())))];
    const std::int64_t eb = (i < static_cast<int>(rank - b.size())) ? 1 : b[static_cast<std::size_t>(i - (rank - static_cast<int>(b.size())))];
    if (ea != eb && ea != 1 && eb != 1)
      throw ShapeError("shapes " + shape_str(a) + " and " + shape_str(b) + " are not broadcast-compatible");
    out[static_cast<std::size_t>(i)] = std::max(ea, eb);
  }
  return out;
}

namespace {

bool same_shape(const Shape& a, const Shape& b) { return a == b; }

// grad_out (shape `out`) accumulated into grad_in (shape `in`, broadcast).
void bcast_accumulate(const Shape& out, const Shape& in, const std::vector<real>& grad_out,
                      std::vector<real>& grad_in,
                      const std::function<real(std::int64_t io, std::int64_t ii)>& term) {
  if (same_shape(out, in)) {
    const std::int64_t n = static_cast<std::int64_t>(grad_out.size());
    for (std::int64_t i = 0; i < n; ++i) grad_in[static_cast<std::size_t>(i)] += term(i, i);
    return;
  }
  for_each_bcast2(out, in, in, [&](std::int64_t io, std::int64_t ii, std::int64_t) {
    grad_in[static_cast<std::size_t>(ii)] += term(io, ii);
  });
}

void scan_finite(const std::vector<real>& v, const char* what) {
  for (real x : v) {
    if (!finite(x)) throw NumericError(std::string(what) + " produced a non-finite value");
  }
}

}  // namespace

// ---- elementwise ----

Tensor elementwise(Ew kind, const Tensor& a) {
  const auto ai = a.impl();
  auto out = make_impl(ai->shape);
  const std::int64_t n = ai->numel();
  const real* pa = ai->data.data();
  real* po = out->data.data();
  switch (kind) {
    case Ew::Relu:
      for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] > real(0) ? pa[i] : real(0);
      break;
    case Ew::Sigmoid:
      for (std::int64_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(pa[i]);
        po[i] = static_cast<real>(x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                                           : std::exp(x) / (1.0 + std::exp(x)));
      }
      break;
    case Ew::Exp:
      for (std::int64_t i = 0; i < n; ++i) po[i] = static_cast<real>(std::exp(static_cast<double>(pa[i])));
      scan_finite(out->data, "exp");
      break;
    case Ew::Sqrt:
      for (std::int64_t i = 0; i < n; ++i) po[i] = static_cast<real>(std::sqrt(static_cast<double>(pa[i])));
      scan_finite(out->data, "sqrt");
      break;
    case Ew::Neg:
      for (std::int64_t i = 0; i < n; ++i) po[i] = -pa[i];
      break;
    default:
      throw ValueError("elementwise: binary kind called with one operand");
  }
  if (n == 1) {
    const double x = ai->scalar_as_double();
    switch (kind) {
      case Ew::Relu: out->set_exact(x > 0.0 ? x : 0.0); break;
      case Ew::Sigmoid:
        out->set_exact(x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)));
        break;
      case Ew::Exp: out->set_exact(std::exp(x)); break;
      case Ew::Sqrt: out->set_exact(std::sqrt(x)); break;
      case Ew::Neg: out->set_exact(-x); break;
      default: break;
    }
  }
  Tensor result = Tensor::wrap(out);
  maybe_record({ai}, out, [kind, ai, out] {
    if (!grad_participates(ai)) return;
    ai->ensure_grad();
    const std::int64_t n2 = ai->numel();
    const real* x = ai->data.data();
    const real* y = out->data.data();
    const real* go = out->grad.data();
    real* gi = ai->grad.data();
    switch (kind) {
      case Ew::Relu:
        for (std::int64_t i = 0; i < n2; ++i) gi[i] += x[i] > real(0) ? go[i] : real(0);
        break;
      case Ew::Sigmoid:
        for (std::int64_t i = 0; i < n2; ++i) gi[i] += go[i] * y[i] * (real(1) - y[i]);
        break;
      case Ew::Exp:
        for (std::int64_t i = 0; i < n2; ++i) gi[i] += go[i] * y[i];
        break;
      case Ew::Sqrt:
        for (std::int64_t i = 0; i < n2; ++i) gi[i] += go[i] * real(0.5) / y[i];
        break;
      case Ew::Neg:
        for (std::int64_t i = 0; i < n2; ++i) gi[i] -= go[i];
        break;
      default:
        break;
    }
  });
  return result;
}

Tensor elementwise(Ew kind, const Tensor& a, const Tensor& b) {
  if (kind != Ew::Add && kind != Ew::Sub && kind != Ew::Mul && kind != Ew::Div)
    throw ValueError("elementwise: unary kind called with two operands");
  const auto ai = a.impl();
  const auto bi = b.impl();
  const Shape out_shape = broadcast_shape(ai->shape, bi->shape);
  auto out = make_impl(out_shape);
  const real* pa = ai->data.data();
  const real* pb = bi->data.data();
  real* po = out->data.data();

  if (kind == Ew::Div) {
    for (real v : bi->data)
      if (v == real(0)) throw NumericError("div: exact zero divisor element");
  }

  const bool fast = same_shape(ai->shape, bi->shape) && same_shape(ai->shape, out_shape);
  const std::int64_t n = shape_numel(out_shape);
  auto apply = [kind](real x, real y) {
    switch (kind) {
      case Ew::Add: return x + y;
      case Ew::Sub: return x - y;
      case Ew::Mul: return x * y;
      default: return x / y;
    }
  };
  if (fast) {
    for (std::int64_t i = 0; i < n; ++i) po[i] = apply(pa[i], pb[i]);
  } else {
    for_each_bcast2(out_shape, ai->shape, bi->shape,
                    [&](std::int64_t io, std::int64_t ia, std::int64_t ib) {
                      po[io] = apply(pa[ia], pb[ib]);
                    });
  }
  if (n == 1) {
    const double x = ai->scalar_as_double();
    const double y = bi->scalar_as_double();
    switch (kind) {
      case Ew::Add: out->set_exact(x + y); break;
      case Ew::Sub: out->set_exact(x - y); break;
      case Ew::Mul: out->set_exact(x * y); break;
      default: out->set_exact(x / y); break;
    }
  }

  Tensor result = Tensor::wrap(out);
  maybe_record({ai, bi}, out, [kind, ai, bi, out, out_shape] {
    const real* go = out->grad.data();
    const real* xa = ai->data.data();
    const real* xb = bi->data.data();
    const bool same = same_shape(ai->shape, bi->shape);
    if (grad_participates(ai)) {
      ai->ensure_grad();
      auto& ga = ai->grad;
      switch (kind) {
        case Ew::Add:
        case Ew::Sub:
          bcast_accumulate(out_shape, ai->shape, out->grad, ga,
                           [&](std::int64_t io, std::int64_t) { return go[io]; });
          break;
        case Ew::Mul:
          if (same) {
            const std::int64_t n2 = ai->numel();
            for (std::int64_t i = 0; i < n2; ++i) ga[static_cast<std::size_t>(i)] += go[i] * xb[i];
          } else {
            for_each_bcast2(out_shape, ai->shape, bi->shape,
                            [&](std::int64_t io, std::int64_t ia, std::int64_t ib) {
                              ga[static_cast<std::size_t>(ia)] += go[io] * xb[ib];
                            });
          }
          break;
        case Ew::Div:
          for_each_bcast2(out_shape, ai->shape, bi->shape,
                          [&](std::int64_t io, std::int64_t ia, std::int64_t ib) {
                            ga[static_cast<std::size_t>(ia)] += go[io] / xb[ib];
                          });
          break;
        default:
          break;
      }
    }
    if (grad_participates(bi)) {
      bi->ensure_grad();
      auto& gb = bi->grad;
      switch (kind) {
        case Ew::Add:
          bcast_accumulate(out_shape, bi->shape, out->grad, gb,
                           [&](std::int64_t io, std::int64_t) { return go[io]; });
          break;
        case Ew::Sub:
          bcast_accumulate(out_shape, bi->shape, out->grad, gb,
                           [&](std::int64_t io, std::int64_t) { return -go[io]; });
          break;
        case Ew::Mul:
          if (same) {
            const std::int64_t n2 = bi->numel();
            for (std::int64_t i = 0; i < n2; ++i) gb[static_cast<std::size_t>(i)] += go[i] * xa[i];
          } else {
            for_each_bcast2(out_shape, ai->shape, bi->shape,
                            [&](std::int64_t io, std::int64_t ia, std::int64_t ib) {
                              gb[static_cast<std::size_t>(ib)] += go[io] * xa[ia];
                            });
          }
          break;
        case Ew::Div:
          for_each_bcast2(out_shape, ai->shape, bi->shape,
                          [&](std::int64_t io, std::int64_t ia, std::int64_t ib) {
                            const real d = xb[ib];
                            gb[static_cast<std::size_t>(ib)] -= go[io] * xa[ia] / (d * d);
                          });
          break;
        default:
          break;
      }
    }
  });
  return result;
}

// ---- matmul ----

namespace {

struct MatDims {
  std::int64_t batch, m, k, n;
};

MatDims matmul_dims(const Shape& a, const Shape& b) {
  if (a.size() < 2 || a.size() > 3 || b.size() < 2 || b.size() > 3 || a.size() != b.size())
    throw ShapeError("matmul: operands must both be rank 2 or rank 3, got " + shape_str(a) + " and " + shape_str(b));
  MatDims d{};
  if (a.size() == 2) {
    d.batch = 1;
    d.m = a[0];
    d.k = a[1];
    if (b[0] != d.k) throw ShapeError("matmul: inner extents disagree: " + shape_str(a) + " vs " + shape_str(b));
    d.n = b[1];
  } else {
    if (a[0] != b[0]) throw ShapeError("matmul: batch extents disagree: " + shape_str(a) + " vs " + shape_str(b));
    d.batch = a[0];
    d.m = a[1];
    d.k = a[2];
    if (b[1] != d.k) throw ShapeError("matmul: inner extents disagree: " + shape_str(a) + " vs " + shape_str(b));
    d.n = b[2];
  }
  return d;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  const auto ai = a.impl();
  const auto bi = b.impl();
  const MatDims d = matmul_dims(ai->shape, bi->shape);
  Shape out_shape = ai->shape.size() == 2 ? Shape{d.m, d.n} : Shape{d.batch, d.m, d.n};
  auto out = make_impl(out_shape);

  const real* pa = ai->data.data();
  const real* pb = bi->data.data();
  real* po = out->data.data();
  std::vector<acc_t> row(static_cast<std::size_t>(d.n));
  for (std::int64_t bt = 0; bt < d.batch; ++bt) {
    const real* A = pa + bt * d.m * d.k;
    const real* B = pb + bt * d.k * d.n;
    real* O = po + bt * d.m * d.n;
    for (std::int64_t i = 0; i < d.m; ++i) {
      std::fill(row.begin(), row.end(), acc_t(0));
      for (std::int64_t kk = 0; kk < d.k; ++kk) {
        const acc_t av = static_cast<acc_t>(A[i * d.k + kk]);
        const real* Brow = B + kk * d.n;
        for (std::int64_t j = 0; j < d.n; ++j) row[static_cast<std::size_t>(j)] += av * static_cast<acc_t>(Brow[j]);
      }
      for (std::int64_t j = 0; j < d.n; ++j) O[i * d.n + j] = static_cast<real>(row[static_cast<std::size_t>(j)]);
    }
  }

  Tensor result = Tensor::wrap(out);
  maybe_record({ai, bi}, out, [ai, bi, out, d] {
    const real* go = out->grad.data();
    const real* pa2 = ai->data.data();
    const real* pb2 = bi->data.data();
    if (grad_participates(ai)) {
      ai->ensure_grad();
      real* ga = ai->grad.data();
      // dA[i,k] += sum_j G[i,j] * B[k,j]
      for (std::int64_t bt = 0; bt < d.batch; ++bt) {
        const real* G = go + bt * d.m * d.n;
        const real* B = pb2 + bt * d.k * d.n;
        real* GA = ga + bt * d.m * d.k;
        for (std::int64_t i = 0; i < d.m; ++i) {
          for (std::int64_t kk = 0; kk < d.k; ++kk) {
            acc_t s = 0;
            const real* Grow = G + i * d.n;
            const real* Brow = B + kk * d.n;
            for (std::int64_t j = 0; j < d.n; ++j) s += static_cast<acc_t>(Grow[j]) * static_cast<acc_t>(Brow[j]);
            GA[i * d.k + kk] += static_cast<real>(s);
          }
        }
      }
    }
    if (grad_participates(bi)) {
      bi->ensure_grad();
      real* gb = bi->grad.data();
      // dB[k,j] += sum_i A[i,k] * G[i,j]
      std::vector<acc_t> acc_row(static_cast<std::size_t>(d.n));
      for (std::int64_t bt = 0; bt < d.batch; ++bt) {
        const real* G = go + bt * d.m * d.n;
        const real* A = pa2 + bt * d.m * d.k;
        real* GB = gb + bt * d.k * d.n;
        for (std::int64_t kk = 0; kk < d.k; ++kk) {
          std::fill(acc_row.begin(), acc_row.end(), acc_t(0));
          for (std::int64_t i = 0; i < d.m; ++i) {
            const acc_t av = static_cast<acc_t>(A[i * d.k + kk]);
            const real* Grow = G + i * d.n;
            for (std::int64_t j = 0; j < d.n; ++j) acc_row[static_cast<std::size_t>(j)] += av * static_cast<acc_t>(Grow[j]);
          }
          for (std::int64_t j = 0; j < d.n; ++j) GB[kk * d.n + j] += static_cast<real>(acc_row[static_cast<std::size_t>(j)]);
        }
      }
    }
  });
  return result;
}

// ---- reduce ----

Tensor reduce(Reduce kind, const Tensor& t, int axis, bool keep) {
  const auto ti = t.impl();
  const Shape& in_shape = ti->shape;
  const bool full = axis < 0;
  if (!full) check_axis(in_shape, axis);

  Shape out_shape;
  if (full) {
    out_shape = keep ? Shape(in_shape.size(), 1) : Shape{1};
  } else {
    out_shape = in_shape;
    if (keep) {
      out_shape[static_cast<std::size_t>(axis)] = 1;
    } else {
      out_shape.erase(out_shape.begin() + axis);
      if (out_shape.empty()) out_shape = {1};
    }
  }
  auto out = make_impl(out_shape);
  const real* pin = ti->data.data();
  real* pout = out->data.data();

  std::shared_ptr<std::vector<std::int64_t>> argmax;
  if (full) {
    const std::int64_t n = ti->numel();
    if (kind == Reduce::Max) {
      argmax = std::make_shared<std::vector<std::int64_t>>(1, 0);
      real best = pin[0];
      for (std::int64_t i = 1; i < n; ++i)
        if (pin[i] > best) {
          best = pin[i];
          (*argmax)[0] = i;
        }
      pout[0] = best;
      out->set_exact(static_cast<double>(best));
    } else {
      acc_t s = 0;
      for (std::int64_t i = 0; i < n; ++i) s += static_cast<acc_t>(pin[i]);
      const acc_t value = kind == Reduce::Mean ? s / static_cast<acc_t>(n) : s;
      pout[0] = static_cast<real>(value);
      out->set_exact(static_cast<double>(value));
    }
  } else {
    const SliceIter it = slice_iter(in_shape, axis);
    if (kind == Reduce::Max) argmax = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(it.count), 0);
    for (std::int64_t s = 0; s < it.count; ++s) {
      const std::int64_t base = slice_base(it, s);
      if (kind == Reduce::Max) {
        real best = pin[base];
        std::int64_t bi = 0;
        for (std::int64_t j = 1; j < it.len; ++j) {
          const real v = pin[base + j * it.stride];
          if (v > best) {
            best = v;
            bi = j;
          }
        }
        (*argmax)[static_cast<std::size_t>(s)] = bi;
        pout[s] = best;
      } else {
        acc_t sum = 0;
        for (std::int64_t j = 0; j < it.len; ++j) sum += static_cast<acc_t>(pin[base + j * it.stride]);
        pout[s] = static_cast<real>(kind == Reduce::Mean ? sum / static_cast<acc_t>(it.len) : sum);
      }
    }
  }

  Tensor result = Tensor::wrap(out);
  const Shape in_shape_c = in_shape;
  maybe_record({ti}, out, [kind, ti, out, axis, full, argmax, in_shape_c] {
    if (!grad_participates(ti)) return;
    ti->ensure_grad();
    const real* go = out->grad.data();
    real* gi = ti->grad.data();
    if (full) {
      const std::int64_t n = ti->numel();
      if (kind == Reduce::Max) {
        gi[(*argmax)[0]] += go[0];
      } else {
        const real g = kind == Reduce::Mean ? go[0] / static_cast<real>(n) : go[0];
        for (std::int64_t i = 0; i < n; ++i) gi[i] += g;
      }
      return;
    }
    const SliceIter it = slice_iter(in_shape_c, axis);
    for (std::int64_t s = 0; s < it.count; ++s) {
      const std::int64_t base = slice_base(it, s);
      if (kind == Reduce::Max) {
        gi[base + (*argmax)[static_cast<std::size_t>(s)] * it.stride] += go[s];
      } else {
        const real g = kind == Reduce::Mean ? go[s] / static_cast<real>(it.len) : go[s];
        for (std::int64_t j = 0; j < it.len; ++j) gi[base + j * it.stride] += g;
      }
    }
  });
  return result;
}

// ---- softmax ----

Tensor softmax(const Tensor& t, int axis) {
  const auto ti = t.impl();
  check_axis(ti->shape, axis);
  for (real v : ti->data)
    if (std::isnan(static_cast<double>(v))) throw NumericError("softmax: NaN input");
  auto out = make_impl(ti->shape);
  const real* pin = ti->data.data();
  real* pout = out->data.data();
  const SliceIter it = slice_iter(ti->shape, axis);
  for (std::int64_t s = 0; s < it.count; ++s) {
    const std::int64_t base = slice_base(it, s);
    real m = pin[base];
    for (std::int64_t j = 1; j < it.len; ++j) m = std::max(m, pin[base + j * it.stride]);
    acc_t sum = 0;
    for (std::int64_t j = 0; j < it.len; ++j) {
      const real e = static_cast<real>(std::exp(static_cast<double>(pin[base + j * it.stride] - m)));
      pout[base + j * it.stride] = e;
      sum += static_cast<acc_t>(e);
    }
    for (std::int64_t j = 0; j < it.len; ++j)
      pout[base + j * it.stride] = static_cast<real>(static_cast<acc_t>(pout[base + j * it.stride]) / sum);
  }

  Tensor result = Tensor::wrap(out);
  const Shape shape_c = ti->shape;
  maybe_record({ti}, out, [ti, out, axis, shape_c] {
    if (!grad_participates(ti)) return;
    ti->ensure_grad();
    const real* y = out->data.data();
    const real* go = out->grad.data();
    real* gi = ti->grad.data();
    const SliceIter it2 = slice_iter(shape_c, axis);
    for (std::int64_t s = 0; s < it2.count; ++s) {
      const std::int64_t base = slice_base(it2, s);
      acc_t dot = 0;
      for (std::int64_t j = 0; j < it2.len; ++j) {
        const std::int64_t o = base + j * it2.stride;
        dot += static_cast<acc_t>(go[o]) * static_cast<acc_t>(y[o]);
      }
      for (std::int64_t j = 0; j < it2.len; ++j) {
        const std::int64_t o = base + j * it2.stride;
        gi[o] += y[o] * (go[o] - static_cast<real>(dot));
      }
    }
  });
  return result;
}

// ---- shape ops ----

Tensor reshape(const Tensor& t, const Shape& shape) {
  validate_shape(shape);
  const auto ti = t.impl();
  if (shape_numel(shape) != ti->numel())
    throw ShapeError("reshape: cannot view " + shape_str(ti->shape) + " as " + shape_str(shape));
  auto out = std::make_shared<Impl>();
  out->shape = shape;
  out->data = ti->data;
  Tensor result = Tensor::wrap(out);
  maybe_record({ti}, out, [ti, out] {
    if (!grad_participates(ti)) return;
    ti->ensure_grad();
    const std::int64_t n = ti->numel();
    for (std::int64_t i = 0; i < n; ++i) ti->grad[static_cast<std::size_t>(i)] += out->grad[static_cast<std::size_t>(i)];
  });
  return result;
}

Tensor slice(const Tensor& t, int axis, std::int64_t start, std::int64_t length) {
  const auto ti = t.impl();
  check_axis(ti->shape, axis);
  const std::int64_t extent = ti->shape[static_cast<std::size_t>(axis)];
  if (start < 0 || length < 1 || start + length > extent)
    throw ShapeError("slice: range [" + std::to_string(start) + "," + std::to_string(start + length) +
                     ") out of bounds for extent " + std::to_string(extent));
  Shape out_shape = ti->shape;
  out_shape[static_cast<std::size_t>(axis)] = length;
  auto out = make_impl(out_shape);

  const SliceIter it = slice_iter(ti->shape, axis);
  const SliceIter ot = slice_iter(out_shape, axis);
  const real* pin = ti->data.data();
  real* pout = out->data.data();
  for (std::int64_t s = 0; s < it.count; ++s) {
    const std::int64_t ib = slice_base(it, s);
    const std::int64_t ob = slice_base(ot, s);
    for (std::int64_t j = 0; j < length; ++j) pout[ob + j * ot.stride] = pin[ib + (start + j) * it.stride];
  }

  Tensor result = Tensor::wrap(out);
  const Shape in_shape_c = ti->shape;
  maybe_record({ti}, out, [ti, out, axis, start, length, in_shape_c, out_shape] {
    if (!grad_participates(ti)) return;
    ti->ensure_grad();
    const SliceIter it2 = slice_iter(in_shape_c, axis);
    const SliceIter ot2 = slice_iter(out_shape, axis);
    const real* go = out->grad.data();
    real* gi = ti->grad.data();
    for (std::int64_t s = 0; s < it2.count; ++s) {
      const std::int64_t ib = slice_base(it2, s);
      const std::int64_t ob = slice_base(ot2, s);
      for (std::int64_t j = 0; j < length; ++j) gi[ib + (start + j) * it2.stride] += go[ob + j * ot2.stride];
    }
  });
  return result;
}

Tensor transpose_last2(const Tensor& t) {
  const auto ti = t.impl();
  if (ti->shape.size() < 2) throw ShapeError("transpose_last2: rank must be >= 2");
  Shape out_shape = ti->shape;
  const std::size_t r = out_shape.size();
  std::swap(out_shape[r - 2], out_shape[r - 1]);
  auto out = make_impl(out_shape);
  const std::int64_t rows = ti->shape[r - 2];
  const std::int64_t cols = ti->shape[r - 1];
  const std::int64_t mats = ti->numel() / (rows * cols);
  const real* pin = ti->data.data();
  real* pout = out->data.data();
  for (std::int64_t b = 0; b < mats; ++b) {
    const real* A = pin + b * rows * cols;
    real* B = pout + b * rows * cols;
    for (std::int64_t i = 0; i < rows; ++i)
      for (std::int64_t j = 0; j < cols; ++j) B[j * rows + i] = A[i * cols + j];
  }
  Tensor result = Tensor::wrap(out);
  maybe_record({ti}, out, [ti, out, rows, cols, mats] {
    if (!grad_participates(ti)) return;
    ti->ensure_grad();
    const real* go = out->grad.data();
    real* gi = ti->grad.data();
    for (std::int64_t b = 0; b < mats; ++b) {
      const real* G = go + b * rows * cols;
      real* GI = gi + b * rows * cols;
      for (std::int64_t i = 0; i < rows; ++i)
        for (std::int64_t j = 0; j < cols; ++j) GI[i * cols + j] += G[j * rows + i];
    }
  });
  return result;
}

}  // namespace ssdnet
