#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "crgan/autodiff.hpp"
#include "crgan/parameter.hpp"

namespace crgan {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::string worst;  // "<param>[<index>]" of the largest error
};

/// Relative error |a - b| / max(|a|, |b|, floor).
double relative_error(double a, double b, double floor = 1e-6);

/// Compares reverse-mode gradients of a scalar loss against central differences
/// with step `h`, one parameter entry at a time. `build_loss` must bind the
/// parameters through Graph::param and be deterministic across calls.
GradCheckResult gradient_check(const std::function<Var(Graph&)>& build_loss, const ParameterList& params,
                               double h = 1e-5, double floor = 1e-6);

}  // namespace crgan
