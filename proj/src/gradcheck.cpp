#include "crgan/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace crgan {

double relative_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

GradCheckResult gradient_check(const std::function<Var(Graph&)>& build_loss, const ParameterList& params, double h,
                               double floor) {
  zero_grads(params);
  {
    Graph g;
    Var loss = build_loss(g);
    g.accumulate_param_grads(g.backward(loss));
  }
  const auto eval = [&] {
    Graph g;
    return build_loss(g).value().item();
  };

  GradCheckResult result;
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double original = p->value[i];
      p->value[i] = original + h;
      const double up = eval();
      p->value[i] = original - h;
      const double down = eval();
      p->value[i] = original;
      const double numeric = (up - down) / (2.0 * h);
      const double err = relative_error(p->grad[i], numeric, floor);
      ++result.checked;
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst = p->name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

}  // namespace crgan
