/* SPDX-FileCopyrightText: 2026 ssdnet Authors
 * SPDX-License-Identifier: Apache-2.0 */

#include "ssdnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "ssdnet/loss.hpp"

namespace ssdnet {

namespace {

constexpr int kBlock = 8;

void check_same(const ImageBuffer& a, const ImageBuffer& b, const char* what) {
  if (a.width != b.width || a.height != b.height)
    throw ShapeError(std::string(what) + ": image extents disagree");
}

double mse_impl(const ImageBuffer& e, const ImageBuffer& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < e.data.size(); ++i) {
    const double d = static_cast<double>(e.data[i]) - static_cast<double>(r.data[i]);
    s += d * d;
  }
  return s / static_cast<double>(e.data.size());
}

// Asymmetric alpha-trimmed mean (10% dropped at each end).
double trimmed_mean(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  const std::size_t cut = static_cast<std::size_t>(0.1 * static_cast<double>(n));
  double s = 0.0;
  for (std::size_t i = cut; i < n - cut; ++i) s += v[i];
  return s / static_cast<double>(n - 2 * cut);
}

double second_moment_about(const std::vector<double>& v, double mu) {
  double s = 0.0;
  for (double x : v) s += (x - mu) * (x - mu);
  return s / static_cast<double>(v.size());
}

// Log-ratio EME over full kBlock x kBlock blocks.
double eme(const std::vector<double>& plane, int w, int h) {
  const int bx = w / kBlock, by = h / kBlock;
  if (bx < 1 || by < 1) throw ShapeError("uiqm: image smaller than the metric block size");
  double s = 0.0;
  for (int byi = 0; byi < by; ++byi)
    for (int bxi = 0; bxi < bx; ++bxi) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -std::numeric_limits<double>::infinity();
      for (int y = byi * kBlock; y < (byi + 1) * kBlock; ++y)
        for (int x = bxi * kBlock; x < (bxi + 1) * kBlock; ++x) {
          const double v = plane[static_cast<std::size_t>(y) * w + x];
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      if (lo > 1e-12 && hi > 1e-12) s += std::log(hi / lo);
    }
  return 2.0 / (static_cast<double>(bx) * by) * s;
}

// Sobel gradient magnitude, replicated border.
std::vector<double> sobel_magnitude(const std::vector<double>& plane, int w, int h) {
  std::vector<double> out(plane.size(), 0.0);
  auto at = [&](int y, int x) {
    y = std::clamp(y, 0, h - 1);
    x = std::clamp(x, 0, w - 1);
    return plane[static_cast<std::size_t>(y) * w + x];
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double gx = -at(y - 1, x - 1) - 2 * at(y, x - 1) - at(y + 1, x - 1) +
                        at(y - 1, x + 1) + 2 * at(y, x + 1) + at(y + 1, x + 1);
      const double gy = -at(y - 1, x - 1) - 2 * at(y - 1, x) - at(y - 1, x + 1) +
                        at(y + 1, x - 1) + 2 * at(y + 1, x) + at(y + 1, x + 1);
      out[static_cast<std::size_t>(y) * w + x] = std::sqrt(gx * gx + gy * gy);
    }
  return out;
}

// PLIP log-AMEE on the 0..255 scale with gamma = 1026.
double log_amee(const std::vector<double>& plane, int w, int h) {
  constexpr double kGamma = 1026.0;
  const int bx = w / kBlock, by = h / kBlock;
  if (bx < 1 || by < 1) throw ShapeError("uiqm: image smaller than the metric block size");
  double s = 0.0;
  for (int byi = 0; byi < by; ++byi)
    for (int bxi = 0; bxi < bx; ++bxi) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -std::numeric_limits<double>::infinity();
      for (int y = byi * kBlock; y < (byi + 1) * kBlock; ++y)
        for (int x = bxi * kBlock; x < (bxi + 1) * kBlock; ++x) {
          const double v = plane[static_cast<std::size_t>(y) * w + x];
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      const double top = kGamma * (hi - lo) / (kGamma - lo);
      const double bottom = hi + lo - hi * lo / kGamma;
      if (top > 0.0 && bottom > 0.0) {
        const double m = top / bottom;
        s += m * std::log(m);
      }
    }
  return s / (static_cast<double>(bx) * by);
}

struct Lab {
  double l, a, b;
};

Lab rgb_to_lab(double r, double g, double b) {
  auto lin = [](double u) {
    return u <= 0.04045 ? u / 12.92 : std::pow((u + 0.055) / 1.055, 2.4);
  };
  const double rl = lin(r), gl = lin(g), bl = lin(b);
  // sRGB D65; the whitepoint is taken as the exact row sums so neutral gray
  // lands at a* = b* = 0 identically.
  const double x = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl;
  const double y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
  const double z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl;
  const double xn = 0.4124564 + 0.3575761 + 0.1804375;
  const double yn = 0.2126729 + 0.7151522 + 0.0721750;
  const double zn = 0.0193339 + 0.1191920 + 0.9503041;
  auto f = [](double t) {
    constexpr double d = 6.0 / 29.0;
    return t > d * d * d ? std::cbrt(t) : t / (3.0 * d * d) + 4.0 / 29.0;
  };
  const double fx = f(x / xn), fy = f(y / yn), fz = f(z / zn);
  return Lab{116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const std::size_t idx = static_cast<std::size_t>(q * static_cast<double>(v.size() - 1));
  return v[idx];
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(6);
  os << std::fixed << v;
  return os.str();
}

}  // namespace

double mse(const ImageBuffer& estimate, const ImageBuffer& reference) {
  check_same(estimate, reference, "mse");
  return mse_impl(estimate, reference);
}

double mse_scaled(const ImageBuffer& estimate, const ImageBuffer& reference) {
  return 1000.0 * mse(estimate, reference);
}

double psnr(const ImageBuffer& estimate, const ImageBuffer& reference) {
  check_same(estimate, reference, "psnr");
  const double m = mse_impl(estimate, reference);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(m);
}

double ssim_index(const ImageBuffer& estimate, const ImageBuffer& reference) {
  check_same(estimate, reference, "ssim");
  return static_cast<double>(ssim(image_to_tensor(estimate), image_to_tensor(reference)).item());
}

double uiqm(const ImageBuffer& image) {
  const int w = image.width, h = image.height;
  const std::size_t n = image.pixel_count();

  std::vector<double> rg(n), yb(n);
  std::vector<double> chan[3];
  for (auto& c : chan) c.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = image.data[i * 3 + 0];
    const double g = image.data[i * 3 + 1];
    const double b = image.data[i * 3 + 2];
    chan[0][i] = r;
    chan[1][i] = g;
    chan[2][i] = b;
    rg[i] = r - g;
    yb[i] = 0.5 * (r + g) - b;
  }

  const double mu_rg = trimmed_mean(rg);
  const double mu_yb = trimmed_mean(yb);
  const double s_rg = second_moment_about(rg, mu_rg);
  const double s_yb = second_moment_about(yb, mu_yb);
  const double uicm =
      -0.0268 * std::sqrt(mu_rg * mu_rg + mu_yb * mu_yb) + 0.1586 * std::sqrt(s_rg + s_yb);

  const double lambda[3] = {0.299, 0.587, 0.114};
  double uism = 0.0;
  for (int c = 0; c < 3; ++c) {
    std::vector<double> edges = sobel_magnitude(chan[c], w, h);
    for (std::size_t i = 0; i < n; ++i) edges[i] *= chan[c][i];
    uism += lambda[c] * eme(edges, w, h);
  }

  std::vector<double> gray(n);
  for (std::size_t i = 0; i < n; ++i)
    gray[i] = 255.0 * (chan[0][i] + chan[1][i] + chan[2][i]) / 3.0;
  const double uiconm = log_amee(gray, w, h);

  return 0.0282 * uicm + 0.2953 * uism + 3.5753 * uiconm;
}

double uciqe(const ImageBuffer& image) {
  const std::size_t n = image.pixel_count();
  std::vector<double> lum(n), chroma(n), saturation(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Lab lab = rgb_to_lab(image.data[i * 3], image.data[i * 3 + 1], image.data[i * 3 + 2]);
    lum[i] = lab.l;
    chroma[i] = std::sqrt(lab.a * lab.a + lab.b * lab.b);
    const double denom = std::sqrt(chroma[i] * chroma[i] + lab.l * lab.l);
    saturation[i] = denom > 0.0 ? chroma[i] / denom : 0.0;
  }
  double mean_c = 0.0;
  for (double c : chroma) mean_c += c;
  mean_c /= static_cast<double>(n);
  double var_c = 0.0;
  for (double c : chroma) var_c += (c - mean_c) * (c - mean_c);
  const double sigma_c = std::sqrt(var_c / static_cast<double>(n)) / 100.0;

  const double contrast_l = (percentile(lum, 0.99) - percentile(lum, 0.01)) / 100.0;

  double mean_s = 0.0;
  for (double s : saturation) mean_s += s;
  mean_s /= static_cast<double>(n);

  return 0.4680 * sigma_c + 0.2745 * contrast_l + 0.2576 * mean_s;
}

void MetricsReport::finalize() {
  aggregate = MetricsRow{};
  aggregate.path = "mean";
  if (rows.empty()) return;
  for (const auto& r : rows) {
    aggregate.ssim += r.ssim;
    aggregate.psnr += r.psnr;
    aggregate.mse_x1000 += r.mse_x1000;
    aggregate.uiqm += r.uiqm;
    aggregate.uciqe += r.uciqe;
  }
  const double n = static_cast<double>(rows.size());
  aggregate.ssim /= n;
  aggregate.psnr /= n;
  aggregate.mse_x1000 /= n;
  aggregate.uiqm /= n;
  aggregate.uciqe /= n;
}

std::string MetricsReport::to_table() const {
  std::ostringstream os;
  os << "image                            ssim      psnr      mse_x1000 uiqm      uciqe\n";
  auto line = [&os](const MetricsRow& r) {
    std::string p = r.path;
    if (p.size() > 32) p = "..." + p.substr(p.size() - 29);
    os << p;
    for (std::size_t i = p.size(); i < 33; ++i) os << ' ';
    os << fmt(r.ssim) << "  " << fmt(r.psnr) << "  " << fmt(r.mse_x1000) << "  " << fmt(r.uiqm)
       << "  " << fmt(r.uciqe) << "\n";
  };
  for (const auto& r : rows) line(r);
  line(aggregate);
  return os.str();
}

std::string MetricsReport::to_records() const {
  std::ostringstream os;
  os.precision(9);
  for (const auto& r : rows) {
    os << r.path << ' ' << r.ssim << ' ';
    if (std::isinf(r.psnr)) {
      os << "inf";
    } else {
      os << r.psnr;
    }
    os << ' ' << r.mse_x1000 << ' ' << r.uiqm << ' ' << r.uciqe << '\n';
  }
  return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << contents;
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename " + tmp.string() + " -> " + path.string() + " failed: " + ec.message());
}

}  // namespace ssdnet
