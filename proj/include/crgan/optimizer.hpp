#pragma once

#include <cstdint>
#include <vector>

#include "crgan/parameter.hpp"

namespace crgan {

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double eps = 1e-8;
};

/// Moment estimates for one network. D and G each own a separate state.
class AdamState {
 public:
  AdamState() = default;
  AdamState(const ParameterList& params, AdamConfig cfg);

  /// theta <- theta - lr * m_hat / (sqrt(v_hat) + eps), using each Parameter::grad.
  /// Throws NumericError naming the parameter if any gradient is non-finite; in
  /// that case no parameter is modified.
  void step(const ParameterList& params);

  [[nodiscard]] std::int64_t t() const { return t_; }
  [[nodiscard]] const AdamConfig& config() const { return cfg_; }
  [[nodiscard]] const std::vector<Tensor>& first_moments() const { return m_; }
  [[nodiscard]] const std::vector<Tensor>& second_moments() const { return v_; }

 private:
  AdamConfig cfg_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::int64_t t_ = 0;
};

enum class Role { discriminator, generator };

/// Role of micro-step `step` when each block runs `d_steps_per_g` discriminator
/// updates followed by one generator update.
Role alt_schedule(std::int64_t step, int d_steps_per_g = 5);

}  // namespace crgan
