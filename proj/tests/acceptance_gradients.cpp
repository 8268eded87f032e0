/* SPDX-FileCopyrightText: 2026 ssdnet Authors
 * SPDX-License-Identifier: Apache-2.0 */

// Gradient-integrity criterion: finite-difference check of the full training
// objective through a complete C=4, N=1, M=1 model on a 1x3x8x8 input. Runs
// in the 64-bit check build because 32-bit storage noise floors central
// differences far above the per-coordinate tolerance (the production path
// stays 32-bit; this binary shares its sources).

#include <chrono>
#include <cstdio>

#include "ssdnet/gradcheck.hpp"
#include "ssdnet/model.hpp"

using namespace ssdnet;

int main() {
  std::printf("ssdnet acceptance suite (gradient integrity, 64-bit check build)\n");
  ModelConfig cfg;
  cfg.width = 4;
  cfg.cascade_depth = 1;
  cfg.ast_depth = 1;

  const auto t0 = std::chrono::steady_clock::now();
  const ModelGradCheck result = model_gradient_check(cfg, 8, 8, /*seed=*/1, /*step=*/1e-4);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  for (const auto& g : result.groups)
    std::printf("  group %-10s max relative error %.3e\n", g.group.c_str(), g.max_rel_err);

  const bool pass = result.max_rel_err < 1e-3 && seconds < 60.0;
  std::printf("[%s] gradient integrity: full C=4,N=1,M=1 model on 1x3x8x8, max rel err %.3e "
              "(< 1e-3), runtime %.1f s (< 60 s)\n",
              pass ? "PASS" : "FAIL", result.max_rel_err, seconds);
  return pass ? 0 : 1;
}
