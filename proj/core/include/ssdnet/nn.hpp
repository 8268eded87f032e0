/* SPDX-FileCopyrightText: 2026 ssdnet Authors
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include "ssdnet/tensor.hpp"

namespace ssdnet {

// Square-kernel 2-D convolution geometry. Grouped; depthwise is
// groups == in_channels == out_channels.
struct ConvSpec {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  int stride = 1;
  int padding = 0;
  int groups = 1;
  bool has_bias = true;

  static ConvSpec pointwise(int in, int out, bool bias = true) {
    return ConvSpec{in, out, 1, 1, 0, 1, bias};
  }
  static ConvSpec depthwise(int channels, int kernel, bool bias = true) {
    return ConvSpec{channels, channels, kernel, 1, (kernel - 1) / 2, channels, bias};
  }
  static ConvSpec same(int in, int out, int kernel, bool bias = true) {
    return ConvSpec{in, out, kernel, 1, (kernel - 1) / 2, 1, bias};
  }
  bool is_depthwise() const {
    return groups == in_channels && in_channels == out_channels;
  }
};

// x: N x C x H x W, weight: (out, in/groups, k, k), bias: (out) or undefined.
// Zero padding; output H' = (H + 2p - k)/s + 1.
Tensor conv2d(const Tensor& x, const ConvSpec& spec, const Tensor& weight, const Tensor& bias);

// Depthwise k x k followed by pointwise 1 x 1.
Tensor depthwise_separable(const Tensor& x, const Tensor& dw_weight, const Tensor& dw_bias,
                           const Tensor& pw_weight, const Tensor& pw_bias);

// y = t / (||t||_2 + eps) per slice along `axis`.
Tensor l2_normalize(const Tensor& t, int axis, real eps);

// Per spatial location, standardizes channels to zero mean / unit variance,
// then applies gain/offset (shape 1 x C x 1 x 1).
Tensor layernorm_channels(const Tensor& x, const Tensor& gain, const Tensor& offset, real eps);

// Bilinear resampling, align-corners false. scale must be 0.5 or 2.0; the
// downsample requires even spatial extents.
Tensor resize_bilinear(const Tensor& x, double scale);

// N x C x H x W -> N x C x 1 x 1 spatial mean.
Tensor global_avg_pool(const Tensor& x);

// Channel concatenation of two N x C x H x W tensors with matching N, H, W.
Tensor concat_channels(const Tensor& a, const Tensor& b);

namespace detail {
// Rectangular-kernel engine behind conv2d; also drives the separable SSIM
// window. Weight shape (out, in/groups, kh, kw) dictates the kernel.
Tensor conv2d_raw(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride,
                  int pad_h, int pad_w, int groups);
}  // namespace detail

}  // namespace ssdnet
