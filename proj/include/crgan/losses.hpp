#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "crgan/autodiff.hpp"

namespace crgan {

/// Adversarial loss family applied to (batch x N) score matrices. Every form
/// averages over the N scores and over the batch.
///
///  hinge:        L_D = E[1/N sum max(0, 1 - s_x)] + E[1/N sum max(0, 1 + s_z)]
///                L_G = -E[1/N sum s_z]
///  log_paper:    L_D = -E[1/N sum log sig(s_x)] - E[1/N sum (1 - log sig(s_z))]
///                L_G =  E[1/N sum (1 - log sig(s_z))]
///  log_standard: L_D = -E[1/N sum log sig(s_x)] - E[1/N sum log(1 - sig(s_z))]
///                L_G = -E[1/N sum log sig(s_z)]
///
/// log_paper keeps the "1 - log sig" term literally; log_standard is the
/// classical minimax discriminator with the non-saturating generator. The two
/// generator losses differ by the constant 1 and share their gradient.
enum class LossForm { hinge, log_paper, log_standard };

std::string_view to_string(LossForm form);
std::optional<LossForm> parse_loss_form(std::string_view s);

Var d_loss(LossForm form, Var s_real, Var s_fake);
Var g_loss(LossForm form, Var s_fake);

double d_loss(LossForm form, const Tensor& s_real, const Tensor& s_fake);
double g_loss(LossForm form, const Tensor& s_fake);

}  // namespace crgan
