/* SPDX-FileCopyrightText: 2026 ssdnet Authors
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ssdnet/tensor.hpp"

namespace ssdnet {

struct ModelConfig;

using ScalarFn = std::function<Tensor(const Tensor&)>;

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::int64_t worst_index = -1;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
};

// Central-difference check of a scalar-valued function against reverse-mode
// gradients. Per coordinate i the step is step*max(1,|x_i|); the returned
// error is max_i |fd_i - ad_i| / max(|fd_i|, |ad_i|, 1e-8).
GradCheckReport finite_diff_check_report(const ScalarFn& f, const Tensor& x, double step);

double finite_diff_check(const ScalarFn& f, const Tensor& x, double step);

// Per-coordinate relative errors, in x's storage order.
std::vector<double> finite_diff_errors(const ScalarFn& f, const Tensor& x, double step);

struct GroupGradCheck {
  std::string group;
  double max_rel_err = 0.0;
};

struct ModelGradCheck {
  std::vector<GroupGradCheck> groups;  // per top-level parameter group + "input"
  double max_rel_err = 0.0;
};

// Finite-difference check of the full training objective through the whole
// network, parameter tensor by parameter tensor, at a randomized generic
// point (all parameters drawn uniformly so no path is dead at the probe).
// Intended for tiny configurations.
ModelGradCheck model_gradient_check(const ModelConfig& cfg, int height, int width,
                                    std::uint64_t seed, double step);

}  // namespace ssdnet
