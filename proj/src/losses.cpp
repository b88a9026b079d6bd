#include "crgan/losses.hpp"

#include "crgan/errors.hpp"

namespace crgan {

std::string_view to_string(LossForm form) {
  switch (form) {
    case LossForm::hinge: return "hinge";
    case LossForm::log_paper: return "log_paper";
    case LossForm::log_standard: return "log_standard";
  }
  return "?";
}

std::optional<LossForm> parse_loss_form(std::string_view s) {
  if (s == "hinge") return LossForm::hinge;
  if (s == "log_paper") return LossForm::log_paper;
  if (s == "log_standard") return LossForm::log_standard;
  return std::nullopt;
}

Var d_loss(LossForm form, Var s_real, Var s_fake) {
  if (s_real.value().cols() != s_fake.value().cols()) {
    throw ContractError("d_loss: real scores have N = " + std::to_string(s_real.value().cols()) +
                        ", fake scores N = " + std::to_string(s_fake.value().cols()));
  }
  switch (form) {
    case LossForm::hinge:
      return add(mean(max0(add_scalar(scale(s_real, -1.0), 1.0))), mean(max0(add_scalar(s_fake, 1.0))));
    case LossForm::log_paper: {
      Var real_term = scale(mean(log_sigmoid(s_real)), -1.0);
      Var fake_term = scale(mean(add_scalar(scale(log_sigmoid(s_fake), -1.0), 1.0)), -1.0);
      return add(real_term, fake_term);
    }
    case LossForm::log_standard: {
      // log(1 - sig(s)) = log sig(-s)
      Var real_term = scale(mean(log_sigmoid(s_real)), -1.0);
      Var fake_term = scale(mean(log_sigmoid(scale(s_fake, -1.0))), -1.0);
      return add(real_term, fake_term);
    }
  }
  throw ContractError("d_loss: unknown loss form");
}

Var g_loss(LossForm form, Var s_fake) {
  switch (form) {
    case LossForm::hinge: return scale(mean(s_fake), -1.0);
    case LossForm::log_paper: return mean(add_scalar(scale(log_sigmoid(s_fake), -1.0), 1.0));
    case LossForm::log_standard: return scale(mean(log_sigmoid(s_fake)), -1.0);
  }
  throw ContractError("g_loss: unknown loss form");
}

double d_loss(LossForm form, const Tensor& s_real, const Tensor& s_fake) {
  Graph g;
  return d_loss(form, g.constant(s_real), g.constant(s_fake)).value().item();
}

double g_loss(LossForm form, const Tensor& s_fake) {
  Graph g;
  return g_loss(form, g.constant(s_fake)).value().item();
}

}  // namespace crgan
