/* SPDX-FileCopyrightText: 2026 ssdnet Authors
 * SPDX-License-Identifier: Apache-2.0 */

#include "ssdnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ssdnet/common.hpp"
#include "ssdnet/metrics.hpp"

namespace ssdnet {

namespace {

constexpr double kTau = 6.283185307179586476925286766559;

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

double smootherstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * t * (t * (t * 6.0 - 15.0) + 10.0);
}

}  // namespace

void DegradationParams::validate() const {
  for (double b : beta)
    if (b <= 0.0) throw ConfigError("degradation params: attenuation must be positive");
  for (double b : backscatter)
    if (b < 0.0 || b > 1.0) throw ConfigError("degradation params: backscatter must lie in [0,1]");
  if (noise_std < 0.0) throw ConfigError("degradation params: noise_std must be >= 0");
  if (scalar_depth < 0.0) throw ConfigError("degradation params: depth must be >= 0");
}

void DegradationPolicy::validate() const {
  auto rng_ok = [](const std::array<double, 2>& r) { return r[0] <= r[1]; };
  if (!rng_ok(beta_red) || !rng_ok(beta_green) || !rng_ok(beta_blue) || !rng_ok(backscatter_red) ||
      !rng_ok(backscatter_green) || !rng_ok(backscatter_blue) || !rng_ok(depth_range))
    throw ConfigError("degradation policy: each range must satisfy lo <= hi");
  if (beta_blue[0] <= 0.0) throw ConfigError("degradation policy: attenuation must stay positive");
  if (noise_std < 0.0) throw ConfigError("degradation policy: noise_std must be >= 0");
}

DegradationParams DegradationPolicy::sample(Rng& rng, int width, int height) const {
  DegradationParams p;
  p.beta = {rng.uniform(beta_red[0], beta_red[1]), rng.uniform(beta_green[0], beta_green[1]),
            rng.uniform(beta_blue[0], beta_blue[1])};
  p.backscatter = {rng.uniform(backscatter_red[0], backscatter_red[1]),
                   rng.uniform(backscatter_green[0], backscatter_green[1]),
                   rng.uniform(backscatter_blue[0], backscatter_blue[1])};
  p.depth_field = make_depth_field(rng, width, height, depth_range);
  p.noise_std = noise_std;
  return p;
}

ImageBuffer gen_clean(std::uint64_t seed, int width, int height) {
  if (width < 16 || height < 16 || width % 2 != 0 || height % 2 != 0)
    throw ValueError("gen_clean: extents must be even and >= 16");
  Rng rng(seed);
  ImageBuffer img = ImageBuffer::blank(width, height);

  // Smooth per-channel gradient background.
  double base[3], gx[3], gy[3];
  for (int c = 0; c < 3; ++c) {
    base[c] = rng.uniform(0.25, 0.75);
    gx[c] = rng.uniform(-0.35, 0.35);
    gy[c] = rng.uniform(-0.35, 0.35);
  }
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double u = static_cast<double>(x) / width;
      const double v = static_cast<double>(y) / height;
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = static_cast<float>(base[c] + gx[c] * u + gy[c] * v);
    }

  // Soft-edged elliptical shapes.
  const int shapes = 5 + static_cast<int>(rng.next_below(7));
  for (int s = 0; s < shapes; ++s) {
    const double cx = rng.uniform(0.05, 0.95) * width;
    const double cy = rng.uniform(0.05, 0.95) * height;
    const double rx = rng.uniform(0.08, 0.30) * width;
    const double ry = rng.uniform(0.08, 0.30) * height;
    const double soft = rng.uniform(0.15, 0.5);
    const double opacity = rng.uniform(0.4, 0.95);
    double color[3];
    for (double& c : color) c = rng.uniform(0.05, 0.95);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        const double dx = (x - cx) / rx;
        const double dy = (y - cy) / ry;
        const double d = std::sqrt(dx * dx + dy * dy);
        if (d >= 1.0) continue;
        const double alpha = opacity * smootherstep((1.0 - d) / soft);
        for (int c = 0; c < 3; ++c)
          img.at(y, x, c) = static_cast<float>((1.0 - alpha) * img.at(y, x, c) + alpha * color[c]);
      }
  }

  // Band-limited texture shared across channels with per-channel amplitude.
  const int waves = 6;
  for (int k = 0; k < waves; ++k) {
    const double fx = rng.uniform(1.0, 6.0);
    const double fy = rng.uniform(1.0, 6.0);
    const double phase = rng.uniform(0.0, kTau);
    double amp[3];
    for (double& a : amp) a = rng.uniform(0.005, 0.035);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        const double t =
            std::sin(kTau * (fx * x / width + fy * y / height) + phase);
        for (int c = 0; c < 3; ++c)
          img.at(y, x, c) = static_cast<float>(img.at(y, x, c) + amp[c] * t);
      }
  }

  for (auto& v : img.data) v = clamp01(v);
  return img;
}

std::vector<float> make_depth_field(Rng& rng, int width, int height,
                                    const std::array<double, 2>& range) {
  // Two low-frequency cosine modes mapped onto [0,1], then into the range.
  const double f1x = rng.uniform(0.4, 1.4), f1y = rng.uniform(0.4, 1.4);
  const double f2x = rng.uniform(0.8, 2.2), f2y = rng.uniform(0.8, 2.2);
  const double p1 = rng.uniform(0.0, kTau), p2 = rng.uniform(0.0, kTau);
  const double w2 = rng.uniform(0.2, 0.6);
  std::vector<float> depth(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double a = std::cos(kTau * (f1x * x / width + f1y * y / height) + p1);
      const double b = std::cos(kTau * (f2x * x / width + f2y * y / height) + p2);
      const double t = 0.5 + 0.5 * (a + w2 * b) / (1.0 + w2);
      depth[static_cast<std::size_t>(y) * width + x] =
          static_cast<float>(range[0] + (range[1] - range[0]) * t);
    }
  return depth;
}

ImageBuffer degrade(const ImageBuffer& clean, const DegradationParams& params, std::uint64_t seed) {
  params.validate();
  if (!params.depth_field.empty() &&
      params.depth_field.size() != clean.pixel_count())
    throw ShapeError("degrade: depth field does not match the image extents");
  Rng rng(seed);
  ImageBuffer out = ImageBuffer::blank(clean.width, clean.height);
  const std::size_t n = clean.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    const double d = params.depth_field.empty() ? params.scalar_depth
                                                : static_cast<double>(params.depth_field[i]);
    for (int c = 0; c < 3; ++c) {
      const double t = std::exp(-params.beta[static_cast<std::size_t>(c)] * d);
      double v = static_cast<double>(clean.data[i * 3 + c]) * t +
                 params.backscatter[static_cast<std::size_t>(c)] * (1.0 - t);
      if (params.noise_std > 0.0) v += rng.normal(0.0, params.noise_std);
      out.data[i * 3 + c] = clamp01(v);
    }
  }
  return out;
}

namespace {

std::string image_name(const std::string& kind, int index) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%04d.ppm", kind.c_str(), index);
  return buf;
}

void append_params_text(std::ostringstream& os, const DegradationPolicy& p) {
  os << "beta_red=" << p.beta_red[0] << ',' << p.beta_red[1] << '\n'
     << "beta_green=" << p.beta_green[0] << ',' << p.beta_green[1] << '\n'
     << "beta_blue=" << p.beta_blue[0] << ',' << p.beta_blue[1] << '\n'
     << "backscatter_red=" << p.backscatter_red[0] << ',' << p.backscatter_red[1] << '\n'
     << "backscatter_green=" << p.backscatter_green[0] << ',' << p.backscatter_green[1] << '\n'
     << "backscatter_blue=" << p.backscatter_blue[0] << ',' << p.backscatter_blue[1] << '\n'
     << "depth_range=" << p.depth_range[0] << ',' << p.depth_range[1] << '\n'
     << "noise_std=" << p.noise_std << '\n';
}

}  // namespace

DatasetOutput make_dataset(int n_train, int n_test, std::uint64_t seed,
                           const DegradationPolicy& policy, const std::filesystem::path& out_dir,
                           int width, int height) {
  policy.validate();
  if (n_train < 1 || n_test < 1) throw ConfigError("make_dataset: split sizes must be >= 1");

  std::error_code ec;
  std::filesystem::create_directories(out_dir / "train", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "train").string() + ": " + ec.message());
  std::filesystem::create_directories(out_dir / "test", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "test").string() + ": " + ec.message());

  DatasetOutput out;
  out.train.root = out_dir;
  out.train.split = "train";
  out.train.seed = seed;
  out.test.root = out_dir;
  out.test.split = "test";
  out.test.seed = seed;

  const int total = n_train + n_test;
  std::vector<std::pair<std::string, std::string>> rel(static_cast<std::size_t>(total));

  parallel_for(total, [&](std::int64_t i) {
    const bool is_train = i < n_train;
    const std::string split = is_train ? "train" : "test";
    const int local = static_cast<int>(is_train ? i : i - n_train);
    // Independent stream per image; thread assignment cannot change content.
    const std::uint64_t img_seed = seed ^ static_cast<std::uint64_t>(i);
    Rng rng(mix_seed(img_seed, 1));
    const ImageBuffer clean = gen_clean(mix_seed(img_seed, 2), width, height);
    const DegradationParams params = policy.sample(rng, width, height);
    const ImageBuffer dirty = degrade(clean, params, mix_seed(img_seed, 3));

    const std::string clean_rel = split + "/" + image_name("clean", local);
    const std::string dirty_rel = split + "/" + image_name("degraded", local);
    write_ppm(out_dir / clean_rel, clean);
    write_ppm(out_dir / dirty_rel, dirty);
    rel[static_cast<std::size_t>(i)] = {dirty_rel, clean_rel};
  });

  std::ostringstream manifest;
  for (int i = 0; i < total; ++i) {
    const std::string split = i < n_train ? "train" : "test";
    manifest << split << ' ' << rel[static_cast<std::size_t>(i)].first << ' '
             << rel[static_cast<std::size_t>(i)].second << '\n';
    auto& m = i < n_train ? out.train : out.test;
    m.pairs.push_back({out_dir / rel[static_cast<std::size_t>(i)].first,
                       out_dir / rel[static_cast<std::size_t>(i)].second});
  }
  out.manifest_path = out_dir / "manifest.txt";
  write_text_file(out.manifest_path, manifest.str());

  std::ostringstream params_text;
  params_text << "seed=" << seed << '\n'
              << "n_train=" << n_train << '\n'
              << "n_test=" << n_test << '\n'
              << "width=" << width << '\n'
              << "height=" << height << '\n';
  append_params_text(params_text, policy);
  out.params_path = out_dir / "params.txt";
  write_text_file(out.params_path, params_text.str());
  return out;
}

DatasetManifest load_manifest(const std::filesystem::path& manifest_path, const std::string& split) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest " + manifest_path.string());
  DatasetManifest m;
  m.root = manifest_path.parent_path();
  m.split = split;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag, degraded, clean;
    if (!(ls >> tag >> degraded >> clean))
      throw FormatError("manifest " + manifest_path.string() + ": malformed line " +
                        std::to_string(lineno));
    if (tag != split) continue;
    const auto dp = m.root / degraded;
    const auto cp = m.root / clean;
    if (!std::filesystem::exists(dp)) throw IoError("manifest references missing file " + dp.string());
    if (!std::filesystem::exists(cp)) throw IoError("manifest references missing file " + cp.string());
    m.pairs.push_back({dp, cp});
  }
  return m;
}

}  // namespace ssdnet
