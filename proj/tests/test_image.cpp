/* SPDX-FileCopyrightText: 2026 ssdnet Authors
 * SPDX-License-Identifier: Apache-2.0 */

#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ssdnet/image.hpp"
#include "ssdnet/synth.hpp"
#include "test_util.hpp"

using namespace ssdnet;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("ssdnet_test_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

}  // namespace

TEST_CASE("ppm: write/read round trip within quantization") {
  TempDir tmp;
  ImageBuffer img = gen_clean(5, 16, 16);
  const fs::path file = tmp.path / "img.ppm";
  write_ppm(file, img);
  ImageBuffer back = read_ppm(file);
  REQUIRE(back.width == img.width);
  REQUIRE(back.height == img.height);
  float worst = 0;
  for (std::size_t i = 0; i < img.data.size(); ++i)
    worst = std::max(worst, std::abs(img.data[i] - back.data[i]));
  CHECK(worst <= 1.0f / 255.0f);

  // second write of the read-back image is byte-stable
  const fs::path file2 = tmp.path / "img2.ppm";
  write_ppm(file2, back);
  std::ifstream f1(file, std::ios::binary), f2(file2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
}

TEST_CASE("ppm: exact payload bytes for a white/black pair") {
  TempDir tmp;
  ImageBuffer bw = ImageBuffer::blank(2, 1);
  bw.at(0, 0, 0) = bw.at(0, 0, 1) = bw.at(0, 0, 2) = 1.0f;
  const fs::path file = tmp.path / "bw.ppm";
  write_ppm(file, bw);

  std::ifstream in(file, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string header = "P6\n2 1\n255\n";
  REQUIRE(bytes.size() == header.size() + 6);
  CHECK(bytes.substr(0, header.size()) == header);
  const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data()) + header.size();
  CHECK(p[0] == 0xFF);
  CHECK(p[1] == 0xFF);
  CHECK(p[2] == 0xFF);
  CHECK(p[3] == 0x00);
  CHECK(p[4] == 0x00);
  CHECK(p[5] == 0x00);
}

TEST_CASE("ppm: malformed inputs rejected with byte offsets") {
  TempDir tmp;
  auto write_raw = [&](const std::string& name, const std::string& contents) {
    const fs::path p = tmp.path / name;
    std::ofstream out(p, std::ios::binary);
    out << contents;
    return p;
  };

  CHECK_THROWS_AS(read_ppm(write_raw("gray.ppm", "P5\n2 1\n255\n abc")), FormatError);
  CHECK_THROWS_AS(read_ppm(write_raw("badmax.ppm", "P6\n2 1\n65535\n")), FormatError);
  CHECK_THROWS_AS(read_ppm(write_raw("trunc.ppm", "P6\n2 1\n255\nABC")), FormatError);
  CHECK_THROWS_AS(read_ppm(tmp.path / "missing.ppm"), IoError);

  try {
    read_ppm(write_raw("trunc2.ppm", "P6\n2 2\n255\nAB"));
    CHECK(false);
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("byte") != std::string::npos);
  }

  // comments in the header are legal
  const fs::path ok = write_raw("comment.ppm", std::string("P6\n# note\n1 1\n255\n") + std::string("\xFF\x00\x7F", 3));
  ImageBuffer img = read_ppm(ok);
  CHECK(img.width == 1);
  CHECK(img.at(0, 0, 0) == doctest::Approx(1.0));
}

TEST_CASE("image/tensor conversions round trip") {
  ImageBuffer img = gen_clean(9, 16, 16);
  Tensor t = image_to_tensor(img);
  CHECK(t.shape() == Shape{1, 3, 16, 16});
  ImageBuffer back = tensor_to_image(t, false);
  for (std::size_t i = 0; i < img.data.size(); ++i) CHECK(img.data[i] == back.data[i]);

  // clamping applies on export only
  Tensor wild = Tensor::from_values({1, 3, 1, 1}, {-0.5, 0.5, 1.5});
  ImageBuffer clamped = tensor_to_image(wild, true);
  CHECK(clamped.at(0, 0, 0) == 0.0f);
  CHECK(clamped.at(0, 0, 1) == 0.5f);
  CHECK(clamped.at(0, 0, 2) == 1.0f);

  std::vector<ImageBuffer> batch{gen_clean(1, 16, 16), gen_clean(2, 16, 16)};
  Tensor stacked = images_to_batch(batch);
  CHECK(stacked.shape() == Shape{2, 3, 16, 16});
}
