#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "crgan/tensor.hpp"

namespace crgan {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SelftestReport {
  std::vector<CheckResult> checks;
  double seconds = 0.0;

  [[nodiscard]] bool all_passed() const;
};

/// Runs every module invariant with fixed seeds. Failures are reported, not thrown.
SelftestReport selftest();

using RejectFn = std::function<Tensor(const Tensor& v, const Tensor& w)>;

/// Builds `cascades` random cascades (N up to `max_stages`, C_L in {2, 8, 64},
/// entries in [-10, 10]) with `reject_fn` and checks
/// |w_i^T v_{i+1}| <= 1e-9 |w_i| |v_i| and |v_{i+1}| <= |v_i|.
CheckResult check_rejection_chain(const RejectFn& reject_fn, int cascades, std::size_t max_stages,
                                  std::uint64_t seed);

}  // namespace crgan
