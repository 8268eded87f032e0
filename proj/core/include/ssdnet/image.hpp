/* SPDX-FileCopyrightText: 2026 ssdnet Authors
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ssdnet/tensor.hpp"

namespace ssdnet {

// H x W x 3 interleaved RGB image with values in [0,1].
struct ImageBuffer {
  int width = 0;
  int height = 0;
  std::vector<float> data;  // height * width * 3, row-major, RGB

  static ImageBuffer blank(int width, int height, float fill = 0.0f);

  float& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  float at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
};

// Binary P6 PPM, maxval 255. Loads map bytes linearly onto [0,1]; parse
// failures report the offending byte offset.
ImageBuffer read_ppm(const std::filesystem::path& path);

// Clamps to [0,1], quantizes to 8 bits, writes atomically (temp + rename).
void write_ppm(const std::filesystem::path& path, const ImageBuffer& image);

// Layout conversions between interleaved buffers and 1 x 3 x H x W tensors.
Tensor image_to_tensor(const ImageBuffer& image);
ImageBuffer tensor_to_image(const Tensor& t, bool clamp = true);

// Batch of 1 x 3 x H x W conversions stacked along N.
Tensor images_to_batch(const std::vector<ImageBuffer>& images);

}  // namespace ssdnet
