#include <gtest/gtest.h>

#include "crgan/selftest.hpp"

namespace crgan {
namespace {

TEST(Selftest, FreshBuildPassesEveryCheckQuickly) {
  const SelftestReport report = selftest();
  EXPECT_GE(report.checks.size(), 10u);
  for (const auto& c : report.checks) EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
  EXPECT_TRUE(report.all_passed());
  EXPECT_LT(report.seconds, 60.0);
}

}  // namespace
}  // namespace crgan
