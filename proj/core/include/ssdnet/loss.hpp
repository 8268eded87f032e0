/* SPDX-FileCopyrightText: 2026 ssdnet Authors
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include "ssdnet/tensor.hpp"

namespace ssdnet {

// Canonical windowed-SSIM constants: 11x11 Gaussian window (sigma 1.5),
// stabilizers from the dynamic range L, both structure exponents fixed at 1.
// On images smaller than the window, the window shrinks to the largest odd
// size that fits, so the objective stays defined on tiny probe inputs.
struct SsimConfig {
  int window = 11;
  double sigma = 1.5;
  double dynamic_range = 1.0;
  double k1 = 0.01;
  double k2 = 0.03;

  double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
  double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }
  int effective_window(std::int64_t h, std::int64_t w) const;
};

// Weights of the recomposition terms in the total objective.
struct LossWeights {
  real alpha = real(0.2);  // SSIM weight on the recomposed input
  real beta = real(0.2);   // L1 weight on the recomposed input

  void validate() const;
};

// Mean windowed SSIM between two N x C x H x W tensors in [0,1]. Spatial
// extents must be >= the window. Differentiable.
Tensor ssim(const Tensor& estimate, const Tensor& reference, const SsimConfig& cfg = {});

// 1 - ssim.
Tensor ssim_loss(const Tensor& estimate, const Tensor& reference, const SsimConfig& cfg = {});

// Mean absolute deviation over all elements.
Tensor l1_loss(const Tensor& estimate, const Tensor& reference);

// ssim_loss(x_c, y) + l1(x_c, y) + alpha*ssim_loss(x', x) + beta*l1(x', x).
// Terms with zero weight are not evaluated.
Tensor total_loss(const Tensor& x_c, const Tensor& y, const Tensor& x_prime, const Tensor& x,
                  const LossWeights& weights, const SsimConfig& cfg = {});

}  // namespace ssdnet
