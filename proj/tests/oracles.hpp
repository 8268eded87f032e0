/* SPDX-FileCopyrightText: 2026 ssdnet Authors
 * SPDX-License-Identifier: Apache-2.0 */

// Independent double-precision reference implementations used as oracles.
// Everything here is written from the operation definitions with plain
// loops and must stay free of the library's compute paths.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace oracle {

struct Grid {
  std::int64_t n, c, h, w;
  std::vector<double> v;  // NCHW

  double& at(std::int64_t ni, std::int64_t ci, std::int64_t y, std::int64_t x) {
    return v[((ni * c + ci) * h + y) * w + x];
  }
  double at(std::int64_t ni, std::int64_t ci, std::int64_t y, std::int64_t x) const {
    return v[((ni * c + ci) * h + y) * w + x];
  }
  static Grid make(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) {
    return Grid{n, c, h, w, std::vector<double>(static_cast<std::size_t>(n * c * h * w), 0.0)};
  }
};

// Naive grouped convolution, zero padding.
inline Grid conv2d(const Grid& x, const std::vector<double>& weight,
                   const std::vector<double>& bias, std::int64_t cout, std::int64_t kh,
                   std::int64_t kw, std::int64_t stride, std::int64_t pad_h, std::int64_t pad_w,
                   std::int64_t groups) {
  const std::int64_t cpg = x.c / groups;
  const std::int64_t opg = cout / groups;
  const std::int64_t ho = (x.h + 2 * pad_h - kh) / stride + 1;
  const std::int64_t wo = (x.w + 2 * pad_w - kw) / stride + 1;
  Grid out = Grid::make(x.n, cout, ho, wo);
  for (std::int64_t n = 0; n < x.n; ++n)
    for (std::int64_t co = 0; co < cout; ++co) {
      const std::int64_t g = co / opg;
      for (std::int64_t oh = 0; oh < ho; ++oh)
        for (std::int64_t ow = 0; ow < wo; ++ow) {
          double s = bias.empty() ? 0.0 : bias[static_cast<std::size_t>(co)];
          for (std::int64_t cl = 0; cl < cpg; ++cl)
            for (std::int64_t ky = 0; ky < kh; ++ky)
              for (std::int64_t kx = 0; kx < kw; ++kx) {
                const std::int64_t iy = oh * stride + ky - pad_h;
                const std::int64_t ix = ow * stride + kx - pad_w;
                if (iy < 0 || iy >= x.h || ix < 0 || ix >= x.w) continue;
                const double wv =
                    weight[static_cast<std::size_t>(((co * cpg + cl) * kh + ky) * kw + kx)];
                s += wv * x.at(n, g * cpg + cl, iy, ix);
              }
          out.at(n, co, oh, ow) = s;
        }
    }
  return out;
}

// Bilinear resize, align-corners false, scale 0.5 or 2.0.
inline Grid resize_bilinear(const Grid& x, double scale) {
  const std::int64_t ho = scale == 0.5 ? x.h / 2 : 2 * x.h;
  const std::int64_t wo = scale == 0.5 ? x.w / 2 : 2 * x.w;
  Grid out = Grid::make(x.n, x.c, ho, wo);
  for (std::int64_t n = 0; n < x.n; ++n)
    for (std::int64_t c = 0; c < x.c; ++c)
      for (std::int64_t oy = 0; oy < ho; ++oy)
        for (std::int64_t ox = 0; ox < wo; ++ox) {
          const double sy = (oy + 0.5) / scale - 0.5;
          const double sx = (ox + 0.5) / scale - 0.5;
          const std::int64_t y0 = static_cast<std::int64_t>(std::floor(sy));
          const std::int64_t x0 = static_cast<std::int64_t>(std::floor(sx));
          const double fy = sy - static_cast<double>(y0);
          const double fx = sx - static_cast<double>(x0);
          auto cl = [](std::int64_t v, std::int64_t hi) { return std::clamp<std::int64_t>(v, 0, hi - 1); };
          const double v00 = x.at(n, c, cl(y0, x.h), cl(x0, x.w));
          const double v01 = x.at(n, c, cl(y0, x.h), cl(x0 + 1, x.w));
          const double v10 = x.at(n, c, cl(y0 + 1, x.h), cl(x0, x.w));
          const double v11 = x.at(n, c, cl(y0 + 1, x.h), cl(x0 + 1, x.w));
          out.at(n, c, oy, ox) =
              (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
        }
  return out;
}

// Per-row softmax of a square score matrix.
inline std::vector<double> softmax_rows(const std::vector<double>& a, std::int64_t rows,
                                        std::int64_t cols) {
  std::vector<double> out(a.size());
  for (std::int64_t r = 0; r < rows; ++r) {
    double m = a[static_cast<std::size_t>(r * cols)];
    for (std::int64_t j = 1; j < cols; ++j) m = std::max(m, a[static_cast<std::size_t>(r * cols + j)]);
    double s = 0.0;
    for (std::int64_t j = 0; j < cols; ++j) {
      out[static_cast<std::size_t>(r * cols + j)] = std::exp(a[static_cast<std::size_t>(r * cols + j)] - m);
      s += out[static_cast<std::size_t>(r * cols + j)];
    }
    for (std::int64_t j = 0; j < cols; ++j) out[static_cast<std::size_t>(r * cols + j)] /= s;
  }
  return out;
}

// Dense/sparse fusion of attention scores (per row of a square matrix).
inline std::vector<double> attention_fuse(const std::vector<double>& a, std::int64_t rows,
                                          std::int64_t cols, double w_dense, double w_sparse,
                                          double eps) {
  std::vector<double> dense = softmax_rows(a, rows, cols);
  std::vector<double> out(a.size());
  for (std::int64_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::int64_t j = 0; j < cols; ++j) s += std::max(0.0, a[static_cast<std::size_t>(r * cols + j)]);
    for (std::int64_t j = 0; j < cols; ++j) {
      const double sp = std::max(0.0, a[static_cast<std::size_t>(r * cols + j)]) / (s + eps);
      out[static_cast<std::size_t>(r * cols + j)] =
          w_dense * dense[static_cast<std::size_t>(r * cols + j)] + w_sparse * sp;
    }
  }
  return out;
}

// Channel-token attention for one batch element: q/k/v laid out (C, P) with
// P pixels; per head, L2-normalized channel similarity scaled by the head
// temperature, fused, applied to v. Mirrors Eqs. (5)-(7).
inline std::vector<double> channel_attention(const std::vector<double>& q,
                                             const std::vector<double>& k,
                                             const std::vector<double>& v, std::int64_t channels,
                                             std::int64_t pixels,
                                             const std::vector<double>& temperature, double w_dense,
                                             double w_sparse, double eps, int heads) {
  const std::int64_t d = channels / heads;
  std::vector<double> out(static_cast<std::size_t>(channels * pixels), 0.0);
  auto normalized = [&](const std::vector<double>& m, std::int64_t row) {
    std::vector<double> r(static_cast<std::size_t>(pixels));
    double ss = 0.0;
    for (std::int64_t p = 0; p < pixels; ++p) ss += m[static_cast<std::size_t>(row * pixels + p)] * m[static_cast<std::size_t>(row * pixels + p)];
    const double scale = 1.0 / (std::sqrt(ss) + eps);
    for (std::int64_t p = 0; p < pixels; ++p) r[static_cast<std::size_t>(p)] = m[static_cast<std::size_t>(row * pixels + p)] * scale;
    return r;
  };
  for (int head = 0; head < heads; ++head) {
    std::vector<std::vector<double>> qn(static_cast<std::size_t>(d)), kn(static_cast<std::size_t>(d));
    for (std::int64_t i = 0; i < d; ++i) {
      qn[static_cast<std::size_t>(i)] = normalized(q, head * d + i);
      kn[static_cast<std::size_t>(i)] = normalized(k, head * d + i);
    }
    std::vector<double> scores(static_cast<std::size_t>(d * d));
    for (std::int64_t i = 0; i < d; ++i)
      for (std::int64_t j = 0; j < d; ++j) {
        double s = 0.0;
        for (std::int64_t p = 0; p < pixels; ++p) s += qn[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)] * kn[static_cast<std::size_t>(j)][static_cast<std::size_t>(p)];
        scores[static_cast<std::size_t>(i * d + j)] = s * temperature[static_cast<std::size_t>(head)];
      }
    const std::vector<double> fused = attention_fuse(scores, d, d, w_dense, w_sparse, eps);
    for (std::int64_t i = 0; i < d; ++i)
      for (std::int64_t p = 0; p < pixels; ++p) {
        double s = 0.0;
        for (std::int64_t j = 0; j < d; ++j)
          s += fused[static_cast<std::size_t>(i * d + j)] * v[static_cast<std::size_t>((head * d + j) * pixels + p)];
        out[static_cast<std::size_t>((head * d + i) * pixels + p)] = s;
      }
  }
  return out;
}

// Windowed SSIM over valid positions with a Gaussian window; inputs NCHW.
inline double ssim(const Grid& e, const Grid& r, int window = 11, double sigma = 1.5,
                   double c1 = 0.01 * 0.01, double c2 = 0.03 * 0.03) {
  std::vector<double> taps(static_cast<std::size_t>(window));
  const double mid = (window - 1) / 2.0;
  double tap_sum = 0.0;
  for (int i = 0; i < window; ++i) {
    taps[static_cast<std::size_t>(i)] = std::exp(-(i - mid) * (i - mid) / (2 * sigma * sigma));
    tap_sum += taps[static_cast<std::size_t>(i)];
  }
  for (auto& t : taps) t /= tap_sum;

  const std::int64_t ho = e.h - window + 1;
  const std::int64_t wo = e.w - window + 1;
  if (ho < 1 || wo < 1) throw std::runtime_error("ssim oracle: image smaller than window");
  double total = 0.0;
  std::int64_t count = 0;
  for (std::int64_t n = 0; n < e.n; ++n)
    for (std::int64_t c = 0; c < e.c; ++c)
      for (std::int64_t oy = 0; oy < ho; ++oy)
        for (std::int64_t ox = 0; ox < wo; ++ox) {
          double mu_e = 0, mu_r = 0, ee = 0, rr = 0, er = 0;
          for (int ky = 0; ky < window; ++ky)
            for (int kx = 0; kx < window; ++kx) {
              const double wgt = taps[static_cast<std::size_t>(ky)] * taps[static_cast<std::size_t>(kx)];
              const double ev = e.at(n, c, oy + ky, ox + kx);
              const double rv = r.at(n, c, oy + ky, ox + kx);
              mu_e += wgt * ev;
              mu_r += wgt * rv;
              ee += wgt * ev * ev;
              rr += wgt * rv * rv;
              er += wgt * ev * rv;
            }
          const double var_e = ee - mu_e * mu_e;
          const double var_r = rr - mu_r * mu_r;
          const double cov = er - mu_e * mu_r;
          total += ((2 * mu_e * mu_r + c1) * (2 * cov + c2)) /
                   ((mu_e * mu_e + mu_r * mu_r + c1) * (var_e + var_r + c2));
          ++count;
        }
  return total / static_cast<double>(count);
}

// Scalar Adam trajectory; returns the parameter vector after `steps` updates
// with per-step gradients supplied by `grad_fn(params, step_index)`.
struct AdamRef {
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<double> m, v;
  std::int64_t t = 0;

  void step(std::vector<double>& p, const std::vector<double>& g, double lr) {
    if (m.empty()) {
      m.assign(p.size(), 0.0);
      v.assign(p.size(), 0.0);
    }
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = beta1 * m[i] + (1 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1 - beta2) * g[i] * g[i];
      p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
  }
};

}  // namespace oracle
