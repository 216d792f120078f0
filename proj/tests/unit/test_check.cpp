#include <gtest/gtest.h>

#include "jcf/check.hpp"

using namespace jcf;

TEST(RelativeError, Basics) {
  const std::vector<double> a{1.0, 2.0}, b{1.0, 4.0}, c{1.0};
  EXPECT_DOUBLE_EQ(relative_error(a, b), 0.5);
  EXPECT_EQ(relative_error(b, b), 0.0);
  EXPECT_TRUE(std::isinf(relative_error(a, c)));
}

TEST(OracleSuite, PassesAtTolerance) {
  for (std::uint64_t seed : {0u, 1u}) {
    const SuiteReport r = oracle_suite(seed, 25);
    ASSERT_EQ(r.cases.size(), 4u);
    for (const auto& c : r.cases) {
      EXPECT_TRUE(c.pass) << c.name << " " << c.max_error;
      EXPECT_LT(c.max_error, kOracleTolerance);
      EXPECT_EQ(c.instances, 25u);
    }
    EXPECT_TRUE(r.pass);
  }
}

TEST(GradSuite, PassesAndReportsEveryTensor) {
  const SuiteReport r = grad_suite(7, 4);
  ASSERT_EQ(r.cases.size(), 4u);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.cases[0].name, "seed_7");
  EXPECT_NE(r.cases[0].detail.find("u_shared="), std::string::npos);
}

TEST(CostSuite, Passes) {
  const SuiteReport r = cost_suite(0);
  for (const auto& c : r.cases) EXPECT_TRUE(c.pass) << c.name << ": " << c.detail;
  EXPECT_TRUE(r.pass);
}

TEST(RunSuite, DispatchesByName) {
  EXPECT_EQ(run_suite("cost", 3).suite, "cost");
  EXPECT_THROW(run_suite("speed", 0), InputError);
}

TEST(SuiteReport, JsonShape) {
  const auto j = cost_suite(0).to_json();
  EXPECT_EQ(j["schema"], 1);
  EXPECT_EQ(j["suite"], "cost");
  EXPECT_TRUE(j["cases"].is_array());
}
