/* SPDX-FileCopyrightText: 2026 ssdnet Authors
 * SPDX-License-Identifier: Apache-2.0 */

#include "ssdnet/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace ssdnet {

namespace {

[[noreturn]] void parse_fail(const std::filesystem::path& path, std::size_t offset,
                             const std::string& what) {
  throw FormatError("ppm parse error in " + path.string() + " at byte " + std::to_string(offset) +
                    ": " + what);
}

struct ByteCursor {
  const std::vector<char>& bytes;
  std::size_t pos = 0;

  bool eof() const { return pos >= bytes.size(); }
  char peek() const { return bytes[pos]; }

  // Skips whitespace and '#' comments between header tokens.
  void skip_separators() {
    while (!eof()) {
      const char c = bytes[pos];
      if (c == '#') {
        while (!eof() && bytes[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++pos;
      } else {
        break;
      }
    }
  }

  long read_number(const std::filesystem::path& path, const char* field) {
    skip_separators();
    if (eof()) parse_fail(path, pos, std::string("missing ") + field);
    if (!std::isdigit(static_cast<unsigned char>(bytes[pos])))
      parse_fail(path, pos, std::string("expected digit for ") + field);
    long v = 0;
    while (!eof() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 1 << 30) parse_fail(path, pos, std::string(field) + " out of range");
      ++pos;
    }
    return v;
  }
};

}  // namespace

ImageBuffer ImageBuffer::blank(int width, int height, float fill) {
  if (width < 1 || height < 1) throw ValueError("image: extents must be positive");
  ImageBuffer b;
  b.width = width;
  b.height = height;
  b.data.assign(static_cast<std::size_t>(width) * height * 3, fill);
  return b;
}

ImageBuffer read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();

  ByteCursor cur{bytes};
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
    parse_fail(path, 0, "magic is not P6");
  cur.pos = 2;
  const long w = cur.read_number(path, "width");
  const long h = cur.read_number(path, "height");
  const long maxval = cur.read_number(path, "maxval");
  if (w < 1 || h < 1) parse_fail(path, cur.pos, "non-positive image extents");
  if (maxval != 255) parse_fail(path, cur.pos, "maxval must be 255, got " + std::to_string(maxval));
  if (cur.eof()) parse_fail(path, cur.pos, "missing payload separator");
  const char sep = bytes[cur.pos];
  if (sep != '\n' && sep != ' ' && sep != '\t' && sep != '\r')
    parse_fail(path, cur.pos, "expected single whitespace before payload");
  ++cur.pos;

  const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3;
  if (bytes.size() - cur.pos < need)
    parse_fail(path, bytes.size(), "payload truncated: need " + std::to_string(need) + " bytes, have " +
                                       std::to_string(bytes.size() - cur.pos));

  ImageBuffer img = ImageBuffer::blank(static_cast<int>(w), static_cast<int>(h));
  const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data()) + cur.pos;
  for (std::size_t i = 0; i < need; ++i) img.data[i] = static_cast<float>(p[i]) / 255.0f;
  return img;
}

void write_ppm(const std::filesystem::path& path, const ImageBuffer& image) {
  if (image.width < 1 || image.height < 1) throw ValueError("write_ppm: empty image");
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
    std::vector<unsigned char> payload(image.data.size());
    for (std::size_t i = 0; i < image.data.size(); ++i) {
      const float v = std::clamp(image.data[i], 0.0f, 1.0f);
      payload[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
    }
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename " + tmp.string() + " -> " + path.string() + " failed: " + ec.message());
}

Tensor image_to_tensor(const ImageBuffer& image) {
  const std::int64_t h = image.height, w = image.width;
  std::vector<real> values(static_cast<std::size_t>(3 * h * w));
  for (std::int64_t c = 0; c < 3; ++c)
    for (std::int64_t y = 0; y < h; ++y)
      for (std::int64_t x = 0; x < w; ++x)
        values[static_cast<std::size_t>((c * h + y) * w + x)] =
            static_cast<real>(image.at(static_cast<int>(y), static_cast<int>(x), static_cast<int>(c)));
  return Tensor::from_values({1, 3, h, w}, std::move(values));
}

ImageBuffer tensor_to_image(const Tensor& t, bool clamp) {
  if (t.rank() != 4 || t.shape()[0] != 1 || t.shape()[1] != 3)
    throw ShapeError("tensor_to_image: expected 1 x 3 x H x W, got " + shape_str(t.shape()));
  const std::int64_t h = t.shape()[2], w = t.shape()[3];
  ImageBuffer img = ImageBuffer::blank(static_cast<int>(w), static_cast<int>(h));
  auto d = t.data();
  for (std::int64_t c = 0; c < 3; ++c)
    for (std::int64_t y = 0; y < h; ++y)
      for (std::int64_t x = 0; x < w; ++x) {
        float v = static_cast<float>(d[static_cast<std::size_t>((c * h + y) * w + x)]);
        if (clamp) v = std::clamp(v, 0.0f, 1.0f);
        img.at(static_cast<int>(y), static_cast<int>(x), static_cast<int>(c)) = v;
      }
  return img;
}

Tensor images_to_batch(const std::vector<ImageBuffer>& images) {
  if (images.empty()) throw ValueError("images_to_batch: empty batch");
  const std::int64_t h = images[0].height, w = images[0].width;
  std::vector<real> values;
  values.reserve(images.size() * 3 * static_cast<std::size_t>(h * w));
  for (const auto& img : images) {
    if (img.height != h || img.width != w)
      throw ShapeError("images_to_batch: mixed image extents in batch");
    for (std::int64_t c = 0; c < 3; ++c)
      for (std::int64_t y = 0; y < h; ++y)
        for (std::int64_t x = 0; x < w; ++x)
          values.push_back(static_cast<real>(
              img.at(static_cast<int>(y), static_cast<int>(x), static_cast<int>(c))));
  }
  return Tensor::from_values({static_cast<std::int64_t>(images.size()), 3, h, w}, std::move(values));
}

}  // namespace ssdnet
