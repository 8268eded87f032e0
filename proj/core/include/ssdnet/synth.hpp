/* SPDX-FileCopyrightText: 2026 ssdnet Authors
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "ssdnet/image.hpp"
#include "ssdnet/rng.hpp"

namespace ssdnet {

// Single-scatter water model parameters: per-channel attenuation (1/m),
// backscatter color, a depth field in meters, and sensor noise.
struct DegradationParams {
  std::array<double, 3> beta{0.7, 0.3, 0.1};
  std::array<double, 3> backscatter{0.05, 0.35, 0.45};
  std::vector<float> depth_field;  // H*W meters; empty means scalar_depth
  double scalar_depth = 1.0;
  double noise_std = 0.0;

  void validate() const;
};

// Per-image sampling ranges for dataset generation. The red attenuation
// range follows the 0.6-0.8/m figure for red light in water; the green/blue
// ranges and the blue-green backscatter bias are this project's defaults.
struct DegradationPolicy {
  std::array<double, 2> beta_red{0.6, 0.8};
  std::array<double, 2> beta_green{0.2, 0.4};
  std::array<double, 2> beta_blue{0.05, 0.15};
  std::array<double, 2> backscatter_red{0.0, 0.10};
  std::array<double, 2> backscatter_green{0.15, 0.45};
  std::array<double, 2> backscatter_blue{0.25, 0.55};
  std::array<double, 2> depth_range{0.5, 3.0};
  double noise_std = 0.01;

  void validate() const;
  DegradationParams sample(Rng& rng, int width, int height) const;
};

struct ManifestPair {
  std::filesystem::path degraded;
  std::filesystem::path clean;
};

// One split of paired files plus the provenance needed to regenerate it.
struct DatasetManifest {
  std::filesystem::path root;
  std::string split;  // "train" or "test"
  std::vector<ManifestPair> pairs;
  std::uint64_t seed = 0;
};

struct DatasetOutput {
  DatasetManifest train;
  DatasetManifest test;
  std::filesystem::path manifest_path;
  std::filesystem::path params_path;
};

// Procedural clean image: smooth color gradients, soft-edged shapes and
// band-limited texture. Deterministic in the seed; extents must be even and
// >= 16.
ImageBuffer gen_clean(std::uint64_t seed, int width, int height);

// I_c = J_c * t_c + B_c * (1 - t_c) with t_c = exp(-beta_c * depth), plus
// Gaussian noise, clamped to [0,1]. Deterministic in the seed.
ImageBuffer degrade(const ImageBuffer& clean, const DegradationParams& params, std::uint64_t seed);

// Smooth low-frequency depth surface within `range`.
std::vector<float> make_depth_field(Rng& rng, int width, int height,
                                    const std::array<double, 2>& range);

// Writes paired train/test images plus manifest.txt and params.txt under
// out_dir. Fully reproducible from (seed, policy, sizes); per-image streams
// are derived as seed ^ image-index so generation may run in parallel.
DatasetOutput make_dataset(int n_train, int n_test, std::uint64_t seed,
                           const DegradationPolicy& policy, const std::filesystem::path& out_dir,
                           int width = 64, int height = 64);

// Reads one split back from a manifest file written by make_dataset.
DatasetManifest load_manifest(const std::filesystem::path& manifest_path, const std::string& split);

}  // namespace ssdnet
