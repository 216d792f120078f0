#include <gtest/gtest.h>

#include <cmath>

#include "jcf/grad.hpp"

using namespace jcf;

namespace {

FdCheckConfig fd_config(Method m, bool dual = false, bool normalize = true) {
  FdCheckConfig c;
  c.model.method = m;
  c.model.dual_codebook = dual;
  c.model.normalize_output = normalize;
  return c;
}

bool all_zero(const GradientBundle& g) {
  bool zero = true;
  g.for_each_tensor([&](const ConstTensorRef& t) {
    for (double v : t.data) zero = zero && v == 0.0;
  });
  return zero;
}

}  // namespace

TEST(FiniteDifference, EveryMethodAndVariant) {
  struct Case {
    Method method;
    bool dual, normalize;
  };
  const Case cases[] = {{Method::Baseline, false, true},   {Method::Factorized, false, true},
                        {Method::Factorized, false, false}, {Method::Jcf, false, true},
                        {Method::Jcf, true, true},          {Method::Jcf, false, false},
                        {Method::JcfShared, false, true},   {Method::JcfShared, true, true},
                        {Method::JcfShared, false, false}};
  for (const auto& c : cases)
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const FdCheckReport r = finite_diff_check(fd_config(c.method, c.dual, c.normalize), seed);
      EXPECT_TRUE(r.pass) << to_string(c.method) << " dual=" << c.dual << " norm=" << c.normalize
                          << " seed=" << seed << " err=" << r.max_rel_error;
    }
}

TEST(FiniteDifference, CoversEveryTensorAndTheInput) {
  const FdCheckReport r = finite_diff_check(fd_config(Method::JcfShared, true), 3);
  std::vector<std::string> names;
  for (const auto& t : r.tensors) names.push_back(t.name);
  EXPECT_EQ(names, (std::vector<std::string>{"reduction", "codebook", "codebook_q", "u_shared", "v_shared", "a",
                                             "b", "features"}));
}

TEST(FiniteDifference, LinearSubPathIsTight) {
  // Without output normalization z is linear in u: central differences are exact up to rounding.
  FdCheckConfig c = fd_config(Method::Factorized, false, false);
  c.tensors = {"u", "v"};
  c.tolerance = 1e-7;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const FdCheckReport r = finite_diff_check(c, seed);
    EXPECT_TRUE(r.pass) << "seed " << seed << " err " << r.max_rel_error;
  }
}

TEST(FiniteDifference, TensorFilter) {
  FdCheckConfig c = fd_config(Method::Jcf);
  c.tensors = {"codebook"};
  const FdCheckReport r = finite_diff_check(c, 1);
  ASSERT_EQ(r.tensors.size(), 1u);
  EXPECT_EQ(r.tensors[0].name, "codebook");
}

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
  for (Method m : {Method::Baseline, Method::Factorized, Method::Jcf, Method::JcfShared}) {
    Rng rng(1);
    ModelConfig cfg{m, 6, 4, 3, 3, 2};
    const ModelParams p = random_model(cfg, rng);
    const FeatureSet raw = FeatureSet::from_locations(random_normal(5, 6, rng));
    const GradientBundle g = model_backward(p, raw, Vector(3));
    EXPECT_TRUE(all_zero(g)) << to_string(m);
  }
}

TEST(Backward, ZeroFeaturesGiveZeroFiniteGradients) {
  for (Method m : {Method::Factorized, Method::Jcf, Method::JcfShared}) {
    Rng rng(2);
    ModelConfig cfg{m, 6, 4, 3, 3, 2};
    const ModelParams p = random_model(cfg, rng);
    const GradientBundle g = model_backward(p, FeatureSet(6, 4), random_normal(3, rng));
    EXPECT_TRUE(all_zero(g)) << to_string(m);
    EXPECT_TRUE(all_finite(g.d_raw_features.locations().span()));
  }
}

TEST(Backward, AdditiveOverLocationsWithoutNormalization) {
  Rng rng(3);
  ModelConfig cfg{Method::JcfShared, 6, 4, 3, 3, 2};
  cfg.normalize_output = false;
  const ModelParams p = random_model(cfg, rng);
  const FeatureSet a = FeatureSet::from_locations(random_normal(3, 4, rng));
  const FeatureSet b = FeatureSet::from_locations(random_normal(2, 4, rng));
  const Vector up = random_normal(3, rng);
  GradientBundle sum = pool_backward(p, a, up);
  sum += pool_backward(p, b, up);
  const GradientBundle whole = pool_backward(p, FeatureSet::concat(a, b), up);
  std::vector<std::span<const double>> lhs, rhs;
  sum.for_each_tensor([&](const ConstTensorRef& t) { lhs.push_back(t.data); });
  whole.for_each_tensor([&](const ConstTensorRef& t) { rhs.push_back(t.data); });
  ASSERT_EQ(lhs.size(), rhs.size());
  for (std::size_t i = 0; i < lhs.size(); ++i)
    for (std::size_t k = 0; k < lhs[i].size(); ++k) EXPECT_NEAR(lhs[i][k], rhs[i][k], 1e-12);
}

TEST(Backward, HardAssignmentUnsupported) {
  Rng rng(4);
  ModelConfig cfg{Method::Jcf, 6, 4, 3, 3, 2};
  cfg.hard_assignment = true;
  const ModelParams p = random_model(cfg, rng);
  const FeatureSet raw = FeatureSet::from_locations(random_normal(2, 6, rng));
  EXPECT_NO_THROW(embed(p, raw));
  EXPECT_THROW(model_backward(p, raw, random_normal(3, rng)), UnsupportedModeError);
}

TEST(Backward, UpstreamShapeChecked) {
  Rng rng(5);
  const ModelParams p = random_model({Method::Factorized, 6, 4, 3, 3, 2}, rng);
  EXPECT_THROW(model_backward(p, FeatureSet::from_locations(random_normal(2, 6, rng)), Vector(4)), ShapeError);
}

namespace {

ModelParams scalar_model(double u) {
  ModelParams p;
  p.config = {Method::Factorized, 1, 1, 1, 1, 1};
  p.reduction = Matrix{{1.0}};
  p.rank1 = {Matrix{{u}}, Matrix{{2.0}}};
  return p;
}

}  // namespace

TEST(Sgd, ScalarStep) {
  ModelParams p = scalar_model(1.0);
  GradientBundle g = GradientBundle::zeros_like(p);
  g.d_u(0, 0) = 0.5;
  sgd_step(p, g, 0.1);
  EXPECT_DOUBLE_EQ(p.rank1.u(0, 0), 0.95);
  EXPECT_DOUBLE_EQ(p.rank1.v(0, 0), 2.0);
}

TEST(Sgd, ZeroLearningRateIsIdentity) {
  Rng rng(6);
  ModelParams p = random_model({Method::JcfShared, 6, 4, 3, 3, 2}, rng);
  const ModelParams before = p;
  GradientBundle g = model_backward(p, FeatureSet::from_locations(random_normal(3, 6, rng)), random_normal(3, rng));
  sgd_step(p, g, 0.0);
  EXPECT_EQ(p, before);
}

TEST(Sgd, FrozenTensorsUntouched) {
  ModelParams p = scalar_model(1.0);
  GradientBundle g = GradientBundle::zeros_like(p);
  g.d_u(0, 0) = 1.0;
  g.d_reduction(0, 0) = 1.0;
  sgd_step(p, g, 0.5, {"reduction"});
  EXPECT_DOUBLE_EQ(p.reduction(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(p.rank1.u(0, 0), 0.5);
}

TEST(Sgd, NonFiniteGradientNamesTensorAndLeavesParams) {
  ModelParams p = scalar_model(1.0);
  const ModelParams before = p;
  GradientBundle g = GradientBundle::zeros_like(p);
  g.d_reduction(0, 0) = 0.25;
  g.d_v(0, 0) = NAN;
  try {
    sgd_step(p, g, 0.1);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_EQ(e.tensor(), "v");
  }
  EXPECT_EQ(p, before);
}

TEST(Sgd, RejectsBadLearningRate) {
  ModelParams p = scalar_model(1.0);
  const GradientBundle g = GradientBundle::zeros_like(p);
  EXPECT_THROW(sgd_step(p, g, -0.1), InputError);
  EXPECT_THROW(sgd_step(p, g, NAN), InputError);
  EXPECT_THROW(sgd_step(p, g, INFINITY), InputError);
}

TEST(Sgd, CodebookStaysOnSphere) {
  Rng rng(7);
  ModelParams p = random_model({Method::Jcf, 6, 4, 3, 3, 2}, rng);
  const GradientBundle g = model_backward(p, FeatureSet::from_locations(random_normal(4, 6, rng)), random_normal(3, rng));
  sgd_step(p, g, 5.0);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(norm2(p.codebook.words().row(j)), 1.0, 1e-14);
}

TEST(Bundle, AccumulateMismatchThrows) {
  Rng rng(8);
  const ModelParams a = random_model({Method::Factorized, 6, 4, 3, 3, 2}, rng);
  const ModelParams b = random_model({Method::Jcf, 6, 4, 3, 3, 2}, rng);
  GradientBundle ga = GradientBundle::zeros_like(a);
  EXPECT_THROW(ga += GradientBundle::zeros_like(b), ShapeError);
}
