/* SPDX-FileCopyrightText: 2026 ssdnet Authors
 * SPDX-License-Identifier: Apache-2.0 */

// 64-bit-storage companion of `ssdnet gradcheck`. Central differences need
// more precision than the production 32-bit tensors can provide, so the CLI
// delegates the actual check to this binary, built from the same sources
// with double storage.

#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "ssdnet/gradcheck.hpp"
#include "ssdnet/model.hpp"

int main(int argc, char** argv) {
  ssdnet::ModelConfig cfg;
  cfg.width = 4;
  cfg.cascade_depth = 1;
  cfg.ast_depth = 1;
  std::uint64_t seed = 0;
  int size = 8;
  double step = 1e-4;

  for (int i = 1; i < argc; ++i) {
    auto want = [&](const char* flag) {
      if (std::strcmp(argv[i], flag) != 0) return false;
      if (i + 1 >= argc) {
        std::fprintf(stderr, "missing value for %s\n", flag);
        std::exit(2);
      }
      return true;
    };
    if (want("--width")) cfg.width = std::atoi(argv[++i]);
    else if (want("--cascade-depth")) cfg.cascade_depth = std::atoi(argv[++i]);
    else if (want("--ast-depth")) cfg.ast_depth = std::atoi(argv[++i]);
    else if (want("--heads")) cfg.heads = std::atoi(argv[++i]);
    else if (want("--seed")) seed = static_cast<std::uint64_t>(std::atoll(argv[++i]));
    else if (want("--size")) size = std::atoi(argv[++i]);
    else if (want("--step")) step = std::atof(argv[++i]);
    else {
      std::fprintf(stderr, "unknown flag %s\n", argv[i]);
      return 2;
    }
  }

  if (size * size > 256 || cfg.width > 8) {
    std::fprintf(stderr, "gradcheck is restricted to H*W <= 256 and width <= 8\n");
    return 2;
  }

  try {
    const ssdnet::ModelGradCheck result = ssdnet::model_gradient_check(cfg, size, size, seed, step);
    for (const auto& g : result.groups)
      std::printf("group %s: max relative error %.6e\n", g.group.c_str(), g.max_rel_err);
    std::printf("overall max relative error %.6e\n", result.max_rel_err);
    if (result.max_rel_err < 1e-3) {
      std::printf("gradcheck PASS (< 1e-3, 64-bit check mode)\n");
      return 0;
    }
    std::printf("gradcheck FAIL (>= 1e-3, 64-bit check mode)\n");
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "gradcheck error: %s\n", e.what());
    return 4;
  }
}
