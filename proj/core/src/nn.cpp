/* SPDX-FileCopyrightText: 2026 ssdnet Authors
 * SPDX-License-Identifier: Apache-2.0 */

#include "ssdnet/nn.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ssdnet {

namespace {

using detail::grad_participates;
using detail::make_impl;
using detail::maybe_record;
using Impl = detail::TensorImpl;
using ImplPtr = std::shared_ptr<Impl>;

struct ConvGeom {
  std::int64_t n, cin, h, w;
  std::int64_t cout, cpg, kh, kw;  // cpg = in channels per group
  std::int64_t stride, pad_h, pad_w, groups;
  std::int64_t hout, wout;
  std::int64_t out_per_group;
};

ConvGeom conv_geometry(const Shape& xs, const Shape& ws, int stride, int pad_h, int pad_w,
                       int groups) {
  if (xs.size() != 4) throw ShapeError("conv2d: input must be N x C x H x W, got " + shape_str(xs));
  if (ws.size() != 4) throw ShapeError("conv2d: weight must be rank 4, got " + shape_str(ws));
  ConvGeom g{};
  g.n = xs[0];
  g.cin = xs[1];
  g.h = xs[2];
  g.w = xs[3];
  g.cout = ws[0];
  g.cpg = ws[1];
  g.kh = ws[2];
  g.kw = ws[3];
  g.stride = stride;
  g.pad_h = pad_h;
  g.pad_w = pad_w;
  g.groups = groups;
  if (stride < 1) throw ValueError("conv2d: stride must be >= 1");
  if (groups < 1 || g.cin % groups != 0 || g.cout % groups != 0)
    throw ShapeError("conv2d: channels (" + std::to_string(g.cin) + "->" + std::to_string(g.cout) +
                     ") not divisible by groups " + std::to_string(groups));
  if (g.cpg != g.cin / groups)
    throw ShapeError("conv2d: weight shape " + shape_str(ws) + " does not match in_channels/groups = " +
                     std::to_string(g.cin / groups));
  g.out_per_group = g.cout / groups;
  g.hout = (g.h + 2 * g.pad_h - g.kh) / g.stride + 1;
  g.wout = (g.w + 2 * g.pad_w - g.kw) / g.stride + 1;
  if (g.hout < 1 || g.wout < 1)
    throw ShapeError("conv2d: non-positive output extent for input " + shape_str(xs));
  return g;
}

// Valid output-column range for kernel offset `base` (= kw - pad).
inline void ow_range(std::int64_t base, std::int64_t stride, std::int64_t w, std::int64_t wout,
                     std::int64_t& lo, std::int64_t& hi) {
  lo = 0;
  if (base < 0) lo = (-base + stride - 1) / stride;
  hi = wout - 1;
  const std::int64_t max_iw = w - 1 - base;
  if (max_iw < 0) {
    hi = -1;
    return;
  }
  hi = std::min(hi, max_iw / stride);
}

void conv_forward(const ConvGeom& g, const real* x, const real* wgt, const real* bias, real* out) {
  std::vector<acc_t> row(static_cast<std::size_t>(g.wout));
  for (std::int64_t n = 0; n < g.n; ++n) {
    for (std::int64_t co = 0; co < g.cout; ++co) {
      const std::int64_t grp = co / g.out_per_group;
      const std::int64_t ci0 = grp * g.cpg;
      const real* wko = wgt + co * g.cpg * g.kh * g.kw;
      for (std::int64_t oh = 0; oh < g.hout; ++oh) {
        const acc_t b = bias ? static_cast<acc_t>(bias[co]) : acc_t(0);
        std::fill(row.begin(), row.end(), b);
        for (std::int64_t cl = 0; cl < g.cpg; ++cl) {
          const real* xc = x + ((n * g.cin + ci0 + cl) * g.h) * g.w;
          for (std::int64_t kh = 0; kh < g.kh; ++kh) {
            const std::int64_t ih = oh * g.stride + kh - g.pad_h;
            if (ih < 0 || ih >= g.h) continue;
            const real* xrow = xc + ih * g.w;
            const real* wrow = wko + (cl * g.kh + kh) * g.kw;
            for (std::int64_t kw = 0; kw < g.kw; ++kw) {
              const acc_t wv = static_cast<acc_t>(wrow[kw]);
              if (wv == acc_t(0)) continue;
              const std::int64_t base = kw - g.pad_w;
              std::int64_t lo, hi;
              ow_range(base, g.stride, g.w, g.wout, lo, hi);
              if (g.stride == 1) {
                const real* src = xrow + lo + base;
                acc_t* dst = row.data() + lo;
                const std::int64_t len = hi - lo + 1;
                for (std::int64_t i = 0; i < len; ++i) dst[i] += wv * static_cast<acc_t>(src[i]);
              } else {
                for (std::int64_t ow = lo; ow <= hi; ++ow)
                  row[static_cast<std::size_t>(ow)] += wv * static_cast<acc_t>(xrow[ow * g.stride + base]);
              }
            }
          }
        }
        real* orow = out + ((n * g.cout + co) * g.hout + oh) * g.wout;
        for (std::int64_t ow = 0; ow < g.wout; ++ow) orow[ow] = static_cast<real>(row[static_cast<std::size_t>(ow)]);
      }
    }
  }
}

void conv_backward(const ConvGeom& g, const real* x, const real* wgt, const real* gout,
                   std::vector<acc_t>* gx, std::vector<acc_t>* gw, std::vector<acc_t>* gb) {
  for (std::int64_t n = 0; n < g.n; ++n) {
    for (std::int64_t co = 0; co < g.cout; ++co) {
      const std::int64_t grp = co / g.out_per_group;
      const std::int64_t ci0 = grp * g.cpg;
      const real* wko = wgt + co * g.cpg * g.kh * g.kw;
      for (std::int64_t oh = 0; oh < g.hout; ++oh) {
        const real* grow = gout + ((n * g.cout + co) * g.hout + oh) * g.wout;
        if (gb) {
          acc_t s = 0;
          for (std::int64_t ow = 0; ow < g.wout; ++ow) s += static_cast<acc_t>(grow[ow]);
          (*gb)[static_cast<std::size_t>(co)] += s;
        }
        for (std::int64_t cl = 0; cl < g.cpg; ++cl) {
          const std::int64_t ci = ci0 + cl;
          const real* xc = x + ((n * g.cin + ci) * g.h) * g.w;
          acc_t* gxc = gx ? gx->data() + ((n * g.cin + ci) * g.h) * g.w : nullptr;
          for (std::int64_t kh = 0; kh < g.kh; ++kh) {
            const std::int64_t ih = oh * g.stride + kh - g.pad_h;
            if (ih < 0 || ih >= g.h) continue;
            const real* xrow = xc + ih * g.w;
            const real* wrow = wko + (cl * g.kh + kh) * g.kw;
            acc_t* gxrow = gxc ? gxc + ih * g.w : nullptr;
            acc_t* gwrow = gw ? gw->data() + (co * g.cpg * g.kh + cl * g.kh + kh) * g.kw : nullptr;
            for (std::int64_t kw = 0; kw < g.kw; ++kw) {
              const std::int64_t base = kw - g.pad_w;
              std::int64_t lo, hi;
              ow_range(base, g.stride, g.w, g.wout, lo, hi);
              if (hi < lo) continue;
              const std::int64_t len = hi - lo + 1;
              if (gxrow) {
                const acc_t wv = static_cast<acc_t>(wrow[kw]);
                if (wv != acc_t(0)) {
                  if (g.stride == 1) {
                    acc_t* dst = gxrow + lo + base;
                    const real* src = grow + lo;
                    for (std::int64_t i = 0; i < len; ++i) dst[i] += wv * static_cast<acc_t>(src[i]);
                  } else {
                    for (std::int64_t ow = lo; ow <= hi; ++ow)
                      gxrow[ow * g.stride + base] += wv * static_cast<acc_t>(grow[ow]);
                  }
                }
              }
              if (gwrow) {
                acc_t s = 0;
                if (g.stride == 1) {
                  const real* src = xrow + lo + base;
                  const real* gr = grow + lo;
                  for (std::int64_t i = 0; i < len; ++i) s += static_cast<acc_t>(src[i]) * static_cast<acc_t>(gr[i]);
                } else {
                  for (std::int64_t ow = lo; ow <= hi; ++ow)
                    s += static_cast<acc_t>(xrow[ow * g.stride + base]) * static_cast<acc_t>(grow[ow]);
                }
                gwrow[kw] += s;
              }
            }
          }
        }
      }
    }
  }
}

}  // namespace

namespace detail {

Tensor conv2d_raw(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride,
                  int pad_h, int pad_w, int groups) {
  const auto xi = x.impl();
  const auto wi = weight.impl();
  const bool has_bias = bias.defined();
  const ImplPtr bi = has_bias ? bias.impl() : nullptr;
  const ConvGeom g = conv_geometry(xi->shape, wi->shape, stride, pad_h, pad_w, groups);
  if (has_bias && (bi->shape.size() != 1 || bi->shape[0] != g.cout))
    throw ShapeError("conv2d: bias shape " + shape_str(bi->shape) + " does not match out_channels");

  auto out = make_impl({g.n, g.cout, g.hout, g.wout});
  conv_forward(g, xi->data.data(), wi->data.data(), has_bias ? bi->data.data() : nullptr,
               out->data.data());

  Tensor result = Tensor::wrap(out);
  std::vector<ImplPtr> ins{xi, wi};
  if (has_bias) ins.push_back(bi);
  maybe_record(ins, out, [xi, wi, bi, out, g, has_bias] {
    const bool need_x = grad_participates(xi);
    const bool need_w = grad_participates(wi);
    const bool need_b = has_bias && grad_participates(bi);
    std::vector<acc_t> gx, gw, gb;
    if (need_x) gx.assign(xi->data.size(), acc_t(0));
    if (need_w) gw.assign(wi->data.size(), acc_t(0));
    if (need_b) gb.assign(bi->data.size(), acc_t(0));
    conv_backward(g, xi->data.data(), wi->data.data(), out->grad.data(), need_x ? &gx : nullptr,
                  need_w ? &gw : nullptr, need_b ? &gb : nullptr);
    if (need_x) {
      xi->ensure_grad();
      for (std::size_t i = 0; i < gx.size(); ++i) xi->grad[i] += static_cast<real>(gx[i]);
    }
    if (need_w) {
      wi->ensure_grad();
      for (std::size_t i = 0; i < gw.size(); ++i) wi->grad[i] += static_cast<real>(gw[i]);
    }
    if (need_b) {
      bi->ensure_grad();
      for (std::size_t i = 0; i < gb.size(); ++i) bi->grad[i] += static_cast<real>(gb[i]);
    }
  });
  return result;
}

}  // namespace detail

Tensor conv2d(const Tensor& x, const ConvSpec& spec, const Tensor& weight, const Tensor& bias) {
  const auto& ws = weight.shape();
  if (ws.size() != 4 || ws[0] != spec.out_channels || ws[1] != spec.in_channels / spec.groups ||
      ws[2] != spec.kernel || ws[3] != spec.kernel)
    throw ShapeError("conv2d: weight shape " + shape_str(ws) + " does not match spec (" +
                     std::to_string(spec.out_channels) + "," +
                     std::to_string(spec.in_channels / spec.groups) + "," +
                     std::to_string(spec.kernel) + "," + std::to_string(spec.kernel) + ")");
  if (x.shape()[1] != spec.in_channels)
    throw ShapeError("conv2d: input channels " + std::to_string(x.shape()[1]) +
                     " do not match spec in_channels " + std::to_string(spec.in_channels));
  if (spec.has_bias != bias.defined())
    throw ShapeError("conv2d: bias presence does not match spec");
  return detail::conv2d_raw(x, weight, bias, spec.stride, spec.padding, spec.padding, spec.groups);
}

Tensor depthwise_separable(const Tensor& x, const Tensor& dw_weight, const Tensor& dw_bias,
                           const Tensor& pw_weight, const Tensor& pw_bias) {
  const std::int64_t c = x.shape()[1];
  const int k = static_cast<int>(dw_weight.shape()[2]);
  ConvSpec dw = ConvSpec::depthwise(static_cast<int>(c), k, dw_bias.defined());
  ConvSpec pw = ConvSpec::pointwise(static_cast<int>(c), static_cast<int>(pw_weight.shape()[0]),
                                    pw_bias.defined());
  return conv2d(conv2d(x, dw, dw_weight, dw_bias), pw, pw_weight, pw_bias);
}

Tensor l2_normalize(const Tensor& t, int axis, real eps) {
  if (eps <= real(0)) throw ValueError("l2_normalize: eps must be positive");
  const auto ti = t.impl();
  detail::check_axis(ti->shape, axis);
  auto out = make_impl(ti->shape);
  const detail::SliceIter it = detail::slice_iter(ti->shape, axis);
  const real* pin = ti->data.data();
  real* pout = out->data.data();
  // Per-slice inverse norms are reused by the backward closure.
  auto inv = std::make_shared<std::vector<acc_t>>(static_cast<std::size_t>(it.count));
  auto norms = std::make_shared<std::vector<acc_t>>(static_cast<std::size_t>(it.count));
  for (std::int64_t s = 0; s < it.count; ++s) {
    const std::int64_t base = detail::slice_base(it, s);
    acc_t ss = 0;
    for (std::int64_t j = 0; j < it.len; ++j) {
      const acc_t v = static_cast<acc_t>(pin[base + j * it.stride]);
      ss += v * v;
    }
    const acc_t norm = std::sqrt(ss);
    const acc_t scale = acc_t(1) / (norm + static_cast<acc_t>(eps));
    (*norms)[static_cast<std::size_t>(s)] = norm;
    (*inv)[static_cast<std::size_t>(s)] = scale;
    for (std::int64_t j = 0; j < it.len; ++j)
      pout[base + j * it.stride] = static_cast<real>(static_cast<acc_t>(pin[base + j * it.stride]) * scale);
  }

  Tensor result = Tensor::wrap(out);
  const Shape shape_c = ti->shape;
  maybe_record({ti}, out, [ti, out, axis, eps, inv, norms, shape_c] {
    if (!grad_participates(ti)) return;
    ti->ensure_grad();
    const detail::SliceIter it2 = detail::slice_iter(shape_c, axis);
    const real* x = ti->data.data();
    const real* go = out->grad.data();
    real* gi = ti->grad.data();
    for (std::int64_t s = 0; s < it2.count; ++s) {
      const std::int64_t base = detail::slice_base(it2, s);
      const acc_t scale = (*inv)[static_cast<std::size_t>(s)];
      const acc_t norm = (*norms)[static_cast<std::size_t>(s)];
      acc_t dot = 0;
      for (std::int64_t j = 0; j < it2.len; ++j) {
        const std::int64_t o = base + j * it2.stride;
        dot += static_cast<acc_t>(go[o]) * static_cast<acc_t>(x[o]);
      }
      // d/dx of x*s with s = 1/(norm+eps); the norm-direction term vanishes
      // in the limit norm -> 0, so it is dropped there.
      const acc_t coef = norm > acc_t(0) ? dot * scale * scale / norm : acc_t(0);
      for (std::int64_t j = 0; j < it2.len; ++j) {
        const std::int64_t o = base + j * it2.stride;
        gi[o] += static_cast<real>(static_cast<acc_t>(go[o]) * scale - coef * static_cast<acc_t>(x[o]));
      }
    }
  });
  return result;
}

Tensor layernorm_channels(const Tensor& x, const Tensor& gain, const Tensor& offset, real eps) {
  if (eps <= real(0)) throw ValueError("layernorm_channels: eps must be positive");
  if (x.rank() != 4) throw ShapeError("layernorm_channels: input must be N x C x H x W");
  const std::int64_t c = x.shape()[1];
  const Shape affine{1, c, 1, 1};
  if (gain.shape() != affine || offset.shape() != affine)
    throw ShapeError("layernorm_channels: gain/offset must have shape " + shape_str(affine));
  Tensor mu = reduce_mean(x, 1, true);
  Tensor centered = sub(x, mu);
  Tensor var = reduce_mean(mul(centered, centered), 1, true);
  Tensor denom = sqrt(add(var, Tensor::scalar(eps)));
  return add(mul(div(centered, denom), gain), offset);
}

Tensor resize_bilinear(const Tensor& x, double scale) {
  const auto xi = x.impl();
  if (xi->shape.size() != 4) throw ShapeError("resize_bilinear: input must be N x C x H x W");
  const std::int64_t n = xi->shape[0], c = xi->shape[1], h = xi->shape[2], w = xi->shape[3];
  if (scale != 0.5 && scale != 2.0) throw ValueError("resize_bilinear: scale must be 0.5 or 2.0");

  if (scale == 0.5) {
    if (h % 2 != 0 || w % 2 != 0)
      throw ShapeError("resize_bilinear: downsample requires even extents, got " + shape_str(xi->shape));
    const std::int64_t ho = h / 2, wo = w / 2;
    auto out = make_impl({n, c, ho, wo});
    const real* pin = xi->data.data();
    real* pout = out->data.data();
    for (std::int64_t m = 0; m < n * c; ++m) {
      const real* src = pin + m * h * w;
      real* dst = pout + m * ho * wo;
      for (std::int64_t oh = 0; oh < ho; ++oh) {
        const real* r0 = src + (2 * oh) * w;
        const real* r1 = src + (2 * oh + 1) * w;
        for (std::int64_t ow = 0; ow < wo; ++ow) {
          dst[oh * wo + ow] = static_cast<real>(
              (static_cast<acc_t>(r0[2 * ow]) + static_cast<acc_t>(r0[2 * ow + 1]) +
               static_cast<acc_t>(r1[2 * ow]) + static_cast<acc_t>(r1[2 * ow + 1])) *
              acc_t(0.25));
        }
      }
    }
    Tensor result = Tensor::wrap(out);
    maybe_record({xi}, out, [xi, out, n, c, h, w, ho, wo] {
      if (!grad_participates(xi)) return;
      xi->ensure_grad();
      const real* go = out->grad.data();
      real* gi = xi->grad.data();
      for (std::int64_t m = 0; m < n * c; ++m) {
        const real* gsrc = go + m * ho * wo;
        real* gdst = gi + m * h * w;
        for (std::int64_t oh = 0; oh < ho; ++oh)
          for (std::int64_t ow = 0; ow < wo; ++ow) {
            const real g = gsrc[oh * wo + ow] * real(0.25);
            gdst[(2 * oh) * w + 2 * ow] += g;
            gdst[(2 * oh) * w + 2 * ow + 1] += g;
            gdst[(2 * oh + 1) * w + 2 * ow] += g;
            gdst[(2 * oh + 1) * w + 2 * ow + 1] += g;
          }
      }
    });
    return result;
  }

  // scale == 2.0
  const std::int64_t ho = 2 * h, wo = 2 * w;
  struct Tap {
    std::int64_t i0, i1;
    real w0, w1;
  };
  auto make_taps = [](std::int64_t in, std::int64_t outn) {
    std::vector<Tap> taps(static_cast<std::size_t>(outn));
    for (std::int64_t o = 0; o < outn; ++o) {
      const double src = (static_cast<double>(o) + 0.5) * 0.5 - 0.5;
      double fl = std::floor(src);
      const double frac = src - fl;
      std::int64_t i0 = static_cast<std::int64_t>(fl);
      std::int64_t i1 = i0 + 1;
      i0 = std::clamp<std::int64_t>(i0, 0, in - 1);
      i1 = std::clamp<std::int64_t>(i1, 0, in - 1);
      taps[static_cast<std::size_t>(o)] = {i0, i1, static_cast<real>(1.0 - frac), static_cast<real>(frac)};
    }
    return taps;
  };
  auto row_taps = std::make_shared<std::vector<Tap>>(make_taps(h, ho));
  auto col_taps = std::make_shared<std::vector<Tap>>(make_taps(w, wo));

  auto out = make_impl({n, c, ho, wo});
  const real* pin = xi->data.data();
  real* pout = out->data.data();
  for (std::int64_t m = 0; m < n * c; ++m) {
    const real* src = pin + m * h * w;
    real* dst = pout + m * ho * wo;
    for (std::int64_t oh = 0; oh < ho; ++oh) {
      const Tap rt = (*row_taps)[static_cast<std::size_t>(oh)];
      const real* r0 = src + rt.i0 * w;
      const real* r1 = src + rt.i1 * w;
      for (std::int64_t ow = 0; ow < wo; ++ow) {
        const Tap ct = (*col_taps)[static_cast<std::size_t>(ow)];
        const acc_t top = static_cast<acc_t>(r0[ct.i0]) * ct.w0 + static_cast<acc_t>(r0[ct.i1]) * ct.w1;
        const acc_t bot = static_cast<acc_t>(r1[ct.i0]) * ct.w0 + static_cast<acc_t>(r1[ct.i1]) * ct.w1;
        dst[oh * wo + ow] = static_cast<real>(top * rt.w0 + bot * rt.w1);
      }
    }
  }
  Tensor result = Tensor::wrap(out);
  maybe_record({xi}, out, [xi, out, n, c, h, w, ho, wo, row_taps, col_taps] {
    if (!grad_participates(xi)) return;
    xi->ensure_grad();
    const real* go = out->grad.data();
    real* gi = xi->grad.data();
    for (std::int64_t m = 0; m < n * c; ++m) {
      const real* gsrc = go + m * ho * wo;
      real* gdst = gi + m * h * w;
      for (std::int64_t oh = 0; oh < ho; ++oh) {
        const Tap rt = (*row_taps)[static_cast<std::size_t>(oh)];
        for (std::int64_t ow = 0; ow < wo; ++ow) {
          const Tap ct = (*col_taps)[static_cast<std::size_t>(ow)];
          const real g = gsrc[oh * wo + ow];
          gdst[rt.i0 * w + ct.i0] += g * rt.w0 * ct.w0;
          gdst[rt.i0 * w + ct.i1] += g * rt.w0 * ct.w1;
          gdst[rt.i1 * w + ct.i0] += g * rt.w1 * ct.w0;
          gdst[rt.i1 * w + ct.i1] += g * rt.w1 * ct.w1;
        }
      }
    }
  });
  return result;
}

Tensor global_avg_pool(const Tensor& x) {
  if (x.rank() != 4) throw ShapeError("global_avg_pool: input must be N x C x H x W");
  return reduce_mean(reduce_mean(x, 3, true), 2, true);
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  const auto ai = a.impl();
  const auto bi = b.impl();
  if (ai->shape.size() != 4 || bi->shape.size() != 4)
    throw ShapeError("concat_channels: inputs must be N x C x H x W");
  if (ai->shape[0] != bi->shape[0] || ai->shape[2] != bi->shape[2] || ai->shape[3] != bi->shape[3])
    throw ShapeError("concat_channels: spatial/batch mismatch: " + shape_str(ai->shape) + " vs " +
                     shape_str(bi->shape));
  const std::int64_t n = ai->shape[0], ca = ai->shape[1], cb = bi->shape[1];
  const std::int64_t plane = ai->shape[2] * ai->shape[3];
  auto out = make_impl({n, ca + cb, ai->shape[2], ai->shape[3]});
  const real* pa = ai->data.data();
  const real* pb = bi->data.data();
  real* po = out->data.data();
  for (std::int64_t i = 0; i < n; ++i) {
    std::copy(pa + i * ca * plane, pa + (i + 1) * ca * plane, po + i * (ca + cb) * plane);
    std::copy(pb + i * cb * plane, pb + (i + 1) * cb * plane, po + (i * (ca + cb) + ca) * plane);
  }
  Tensor result = Tensor::wrap(out);
  maybe_record({ai, bi}, out, [ai, bi, out, n, ca, cb, plane] {
    const real* go = out->grad.data();
    if (grad_participates(ai)) {
      ai->ensure_grad();
      for (std::int64_t i = 0; i < n; ++i) {
        const real* g = go + i * (ca + cb) * plane;
        real* gi = ai->grad.data() + i * ca * plane;
        for (std::int64_t j = 0; j < ca * plane; ++j) gi[j] += g[j];
      }
    }
    if (grad_participates(bi)) {
      bi->ensure_grad();
      for (std::int64_t i = 0; i < n; ++i) {
        const real* g = go + (i * (ca + cb) + ca) * plane;
        real* gi = bi->grad.data() + i * cb * plane;
        for (std::int64_t j = 0; j < cb * plane; ++j) gi[j] += g[j];
      }
    }
  });
  return result;
}

}  // namespace ssdnet
