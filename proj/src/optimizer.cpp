#include "crgan/optimizer.hpp"

#include <cmath>

#include "crgan/errors.hpp"

namespace crgan {

AdamState::AdamState(const ParameterList& params, AdamConfig cfg) : cfg_(cfg) {
  for (const Parameter* p : params) {
    m_.push_back(Tensor::zeros_like(p->value));
    v_.push_back(Tensor::zeros_like(p->value));
  }
}

void AdamState::step(const ParameterList& params) {
  if (params.size() != m_.size()) {
    throw ContractError("adam: state tracks " + std::to_string(m_.size()) + " parameters, got " +
                        std::to_string(params.size()));
  }
  for (const Parameter* p : params) {
    require_same_shape(p->value, p->grad, "adam");
    if (!p->grad.all_finite()) throw NumericError("adam: non-finite gradient for parameter '" + p->name + "'");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto theta = params[k]->value.data();
    auto g = params[k]->grad.data();
    auto m = m_[k].data();
    auto v = v_[k].data();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      theta[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
    }
  }
}

Role alt_schedule(std::int64_t step, int d_steps_per_g) {
  if (step < 0) throw DomainError("alt_schedule: negative step");
  if (d_steps_per_g < 0) throw DomainError("alt_schedule: negative d_steps_per_g");
  return step % (d_steps_per_g + 1) < d_steps_per_g ? Role::discriminator : Role::generator;
}

}  // namespace crgan
