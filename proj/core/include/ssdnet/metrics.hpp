/* SPDX-FileCopyrightText: 2026 ssdnet Authors
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ssdnet/image.hpp"

namespace ssdnet {

// Peak-signal-to-noise ratio in dB for [0,1] images (peak 1). Identical
// images yield +infinity, rendered as "inf" in reports.
double psnr(const ImageBuffer& estimate, const ImageBuffer& reference);

// Mean squared error scaled by 1e3, the reporting convention used here.
double mse_scaled(const ImageBuffer& estimate, const ImageBuffer& reference);

double mse(const ImageBuffer& estimate, const ImageBuffer& reference);

// Windowed SSIM on buffers (same definition as the training loss), computed
// through the tensor path on clamped values.
double ssim_index(const ImageBuffer& estimate, const ImageBuffer& reference);

// No-reference underwater quality measure
//   UIQM = 0.0282*UICM + 0.2953*UISM + 3.5753*UIConM
// with the colorfulness/sharpness/contrast components pinned as follows:
//  - UICM: asymmetric alpha-trimmed (10% each side) means and variances of
//    the RG = R-G and YB = (R+G)/2 - B opponent channels,
//    -0.0268*sqrt(muRG^2+muYB^2) + 0.1586*sqrt(sRG^2+sYB^2).
//  - UISM: per channel, Sobel magnitude multiplied by the channel, then a
//    log-ratio block EME over 8x8 blocks, weighted 0.299/0.587/0.114.
//  - UIConM: PLIP log-AMEE over 8x8 blocks of the mean-gray image on the
//    0..255 scale with gamma = 1026.
// Requires extents >= the 8-pixel block.
double uiqm(const ImageBuffer& image);

// No-reference colorimetric measure
//   UCIQE = 0.4680*sigma_chroma + 0.2745*contrast_l + 0.2576*mean_saturation
// over CIELab (D65): chroma/luma normalized by 100, contrast_l the 99th-1st
// luminance percentile spread, saturation = chroma/sqrt(chroma^2+L^2).
double uciqe(const ImageBuffer& image);

struct MetricsRow {
  std::string path;
  double ssim = 0.0;
  double psnr = 0.0;
  double mse_x1000 = 0.0;
  double uiqm = 0.0;
  double uciqe = 0.0;
};

// Per-image rows plus arithmetic-mean aggregates.
struct MetricsReport {
  std::vector<MetricsRow> rows;
  MetricsRow aggregate;  // path holds "mean"

  void finalize();  // recomputes the aggregate from rows

  // Human-readable fixed-width table.
  std::string to_table() const;
  // One machine-readable record per image:
  // path ssim psnr mse_x1000 uiqm uciqe
  std::string to_records() const;
};

void write_text_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace ssdnet
