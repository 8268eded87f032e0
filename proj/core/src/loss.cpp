/* SPDX-FileCopyrightText: 2026 ssdnet Authors
 * SPDX-License-Identifier: Apache-2.0 */

#include "ssdnet/loss.hpp"

#include <cmath>

#include "ssdnet/nn.hpp"

namespace ssdnet {

void LossWeights::validate() const {
  if (alpha < real(0) || beta < real(0))
    throw ConfigError("loss weights must be nonnegative");
}

int SsimConfig::effective_window(std::int64_t h, std::int64_t w) const {
  std::int64_t win = std::min<std::int64_t>(window, std::min(h, w));
  if (win % 2 == 0) --win;
  if (win < 3) throw ShapeError("ssim: spatial extents too small for any window");
  return static_cast<int>(win);
}

namespace {

std::vector<double> gaussian_taps(int window, double sigma) {
  std::vector<double> taps(static_cast<std::size_t>(window));
  const double mid = (window - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < window; ++i) {
    const double d = i - mid;
    taps[static_cast<std::size_t>(i)] = std::exp(-(d * d) / (2.0 * sigma * sigma));
    sum += taps[static_cast<std::size_t>(i)];
  }
  for (auto& t : taps) t /= sum;
  return taps;
}

// Separable Gaussian blur over valid window positions, as a pair of
// depthwise convolutions with fixed (non-trainable) weights.
struct SsimWindow {
  Tensor col;  // (C,1,window,1)
  Tensor row;  // (C,1,1,window)
  int channels;
  int window;

  SsimWindow(int channels_, int window_, const SsimConfig& cfg)
      : channels(channels_), window(window_) {
    const auto taps = gaussian_taps(window, cfg.sigma);
    std::vector<real> v;
    v.reserve(static_cast<std::size_t>(channels) * window);
    for (int c = 0; c < channels; ++c)
      for (int i = 0; i < window; ++i) v.push_back(static_cast<real>(taps[static_cast<std::size_t>(i)]));
    col = Tensor::from_values({channels, 1, window, 1}, v);
    row = Tensor::from_values({channels, 1, 1, window}, std::move(v));
  }

  Tensor blur(const Tensor& x) const {
    Tensor y = detail::conv2d_raw(x, row, Tensor(), 1, 0, 0, channels);
    return detail::conv2d_raw(y, col, Tensor(), 1, 0, 0, channels);
  }
};

}  // namespace

Tensor ssim(const Tensor& estimate, const Tensor& reference, const SsimConfig& cfg) {
  if (estimate.shape() != reference.shape())
    throw ShapeError("ssim: shape mismatch: " + shape_str(estimate.shape()) + " vs " +
                     shape_str(reference.shape()));
  if (estimate.rank() != 4) throw ShapeError("ssim: inputs must be N x C x H x W");
  const int window = cfg.effective_window(estimate.shape()[2], estimate.shape()[3]);

  const int channels = static_cast<int>(estimate.shape()[1]);
  const SsimWindow win(channels, window, cfg);
  const Tensor c1 = Tensor::scalar(static_cast<real>(cfg.c1()));
  const Tensor c2 = Tensor::scalar(static_cast<real>(cfg.c2()));

  Tensor mu_e = win.blur(estimate);
  Tensor mu_r = win.blur(reference);
  Tensor mu_ee = mul(mu_e, mu_e);
  Tensor mu_rr = mul(mu_r, mu_r);
  Tensor mu_er = mul(mu_e, mu_r);
  Tensor var_e = sub(win.blur(mul(estimate, estimate)), mu_ee);
  Tensor var_r = sub(win.blur(mul(reference, reference)), mu_rr);
  Tensor cov = sub(win.blur(mul(estimate, reference)), mu_er);

  Tensor two = Tensor::scalar(real(2));
  Tensor numerator = mul(add(mul(two, mu_er), c1), add(mul(two, cov), c2));
  Tensor denominator = mul(add(add(mu_ee, mu_rr), c1), add(add(var_e, var_r), c2));
  return reduce_mean(div(numerator, denominator));
}

Tensor ssim_loss(const Tensor& estimate, const Tensor& reference, const SsimConfig& cfg) {
  return sub(Tensor::scalar(real(1)), ssim(estimate, reference, cfg));
}

Tensor l1_loss(const Tensor& estimate, const Tensor& reference) {
  if (estimate.shape() != reference.shape())
    throw ShapeError("l1_loss: shape mismatch: " + shape_str(estimate.shape()) + " vs " +
                     shape_str(reference.shape()));
  Tensor d = sub(estimate, reference);
  // |d| = relu(d) + relu(-d), differentiable almost everywhere.
  return reduce_mean(add(relu(d), relu(neg(d))));
}

Tensor total_loss(const Tensor& x_c, const Tensor& y, const Tensor& x_prime, const Tensor& x,
                  const LossWeights& weights, const SsimConfig& cfg) {
  weights.validate();
  Tensor total = add(ssim_loss(x_c, y, cfg), l1_loss(x_c, y));
  if (weights.alpha != real(0))
    total = add(total, mul(Tensor::scalar(weights.alpha), ssim_loss(x_prime, x, cfg)));
  if (weights.beta != real(0))
    total = add(total, mul(Tensor::scalar(weights.beta), l1_loss(x_prime, x)));
  return total;
}

}  // namespace ssdnet
