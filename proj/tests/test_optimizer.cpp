#include <cmath>

#include <gtest/gtest.h>

#include "crgan/errors.hpp"
#include "crgan/optimizer.hpp"
#include "test_util.hpp"

namespace crgan {
namespace {

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  Rng rng(1);
  Parameter p("p", testing::random_tensor(3, 4, -1, 1, rng));
  const Tensor before = p.value;
  AdamState opt({&p}, AdamConfig{});
  for (int i = 0; i < 5; ++i) opt.step({&p});
  EXPECT_EQ(p.value, before);
  EXPECT_EQ(opt.t(), 5);
}

TEST(Adam, FirstStepByHand) {
  Parameter p("theta", Tensor::scalar(1.0));
  p.grad = Tensor::scalar(1.0);
  AdamState opt({&p}, AdamConfig{});
  opt.step({&p});
  EXPECT_DOUBLE_EQ(p.value.item(), 1.0 - 2e-4 / (1.0 + 1e-8));
  EXPECT_NEAR(p.value.item(), 0.9998, 1e-9);
}

TEST(Adam, MatchesReferenceRecurrence) {
  const AdamConfig cfg{.lr = 1e-2, .beta1 = 0.5, .beta2 = 0.9, .eps = 1e-8};
  Parameter p("p", Tensor::row({0.7, -1.3}));
  AdamState opt({&p}, cfg);
  double theta[2] = {0.7, -1.3}, m[2] = {0, 0}, v[2] = {0, 0};
  for (int t = 1; t <= 20; ++t) {
    for (int i = 0; i < 2; ++i) p.grad[static_cast<std::size_t>(i)] = std::sin(3.0 * t + i);
    opt.step({&p});
    for (int i = 0; i < 2; ++i) {
      const double g = std::sin(3.0 * t + i);
      m[i] = cfg.beta1 * m[i] + (1 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1 - cfg.beta2) * g * g;
      const double mh = m[i] / (1 - std::pow(cfg.beta1, t)), vh = v[i] / (1 - std::pow(cfg.beta2, t));
      theta[i] -= cfg.lr * mh / (std::sqrt(vh) + cfg.eps);
      EXPECT_NEAR(p.value[static_cast<std::size_t>(i)], theta[i], 1e-13);
    }
  }
}

TEST(Adam, TenStepsOnQuadraticDecreaseMagnitude) {
  Parameter p("theta", Tensor::scalar(1.0));
  AdamState opt({&p}, AdamConfig{});
  double prev = 1.0;
  for (int i = 0; i < 10; ++i) {
    p.grad = Tensor::scalar(2.0 * p.value.item());
    opt.step({&p});
    EXPECT_LT(std::abs(p.value.item()), prev);
    prev = std::abs(p.value.item());
  }
}

TEST(Adam, NonFiniteGradientNamesParameterAndAppliesNothing) {
  Parameter a("layer.weight", Tensor::scalar(1.0)), b("layer.bias", Tensor::scalar(2.0));
  a.grad = Tensor::scalar(0.5);
  b.grad = Tensor::scalar(std::numeric_limits<double>::infinity());
  AdamState opt({&a, &b}, AdamConfig{});
  try {
    opt.step({&a, &b});
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("layer.bias"), std::string::npos);
  }
  EXPECT_EQ(a.value.item(), 1.0);
  EXPECT_EQ(opt.t(), 0);
}

TEST(Adam, SecondMomentsStayNonNegative) {
  Rng rng(2);
  Parameter p("p", Tensor(4, 4));
  AdamState opt({&p}, AdamConfig{});
  for (int i = 0; i < 10; ++i) {
    p.grad = testing::random_tensor(4, 4, -5, 5, rng);
    opt.step({&p});
  }
  for (double v : opt.second_moments()[0].data()) EXPECT_GE(v, 0.0);
}

TEST(Schedule, FiveToOne) {
  for (int s = 0; s < 5; ++s) EXPECT_EQ(alt_schedule(s), Role::discriminator);
  EXPECT_EQ(alt_schedule(5), Role::generator);
  int d = 0, g = 0;
  for (int s = 0; s < 600; ++s) (alt_schedule(s) == Role::discriminator ? d : g)++;
  EXPECT_EQ(d, 500);
  EXPECT_EQ(g, 100);
}

}  // namespace
}  // namespace crgan
