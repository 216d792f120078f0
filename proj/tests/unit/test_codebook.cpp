#include <gtest/gtest.h>

#include <cmath>

#include "jcf/codebook.hpp"
#include "jcf/features.hpp"
#include "jcf/rng.hpp"

using namespace jcf;

namespace {

Codebook axes(AssignMode mode = SoftMode{0.1}) { return Codebook(Matrix{{1, 0}, {0, 1}}, mode); }

double min_abs_cos(const Codebook& cb, std::span<const double> target) {
  double best = 0.0;
  for (std::size_t j = 0; j < cb.n_words(); ++j) best = std::max(best, std::abs(dot(cb.words().row(j), target)));
  return best;
}

}  // namespace

TEST(SoftAssign, AlignedFeature) {
  const Assignment a = soft_assign(Vector{2, 0}, axes());
  const double e = std::exp(-10.0);
  EXPECT_NEAR(a.weights[0], 1.0 / (1.0 + e), 1e-15);
  EXPECT_NEAR(a.weights[1], e / (1.0 + e), 1e-15);
}

TEST(SoftAssign, DiagonalIsUniform) {
  const Assignment a = soft_assign(Vector{1, 1}, axes());
  EXPECT_NEAR(a.weights[0], 0.5, 1e-15);
  EXPECT_NEAR(a.weights[1], 0.5, 1e-15);
}

TEST(SoftAssign, SimplexAndScaleInvariance) {
  Rng rng(4);
  const Codebook cb(random_normal(5, 6, rng), SoftMode{0.3});
  for (int t = 0; t < 30; ++t) {
    const Vector x = random_normal(6, rng);
    Vector scaled = x;
    for (double& v : scaled) v *= 7.5;
    const Assignment a = soft_assign(x, cb), b = soft_assign(scaled, cb);
    double total = 0.0;
    for (std::size_t j = 0; j < 5; ++j) {
      EXPECT_GE(a.weights[j], 0.0);
      EXPECT_NEAR(a.weights[j], b.weights[j], 1e-14);
      total += a.weights[j];
    }
    EXPECT_NEAR(total, 1.0, 1e-14);
  }
}

TEST(SoftAssign, LowTemperatureApproachesHard) {
  Rng rng(9);
  const Matrix words = random_normal(4, 3, rng);
  const Codebook cold(words, SoftMode{1e-4});
  for (int t = 0; t < 20; ++t) {
    const Vector x = random_normal(3, rng);
    const Assignment s = soft_assign(x, cold), h = hard_assign(x, cold);
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(s.weights[j], h.weights[j], 1e-6);
  }
}

TEST(SoftAssign, ZeroFeatureGivesUniform) {
  const Assignment a = soft_assign(Vector{0, 0}, axes());
  EXPECT_DOUBLE_EQ(a.weights[0], 0.5);
  EXPECT_DOUBLE_EQ(a.weights[1], 0.5);
}

TEST(SoftAssign, Errors) {
  EXPECT_THROW(soft_assign(Vector{1, 0, 0}, axes()), ShapeError);
  EXPECT_THROW(soft_assign(Vector{1, 0}, axes(HardMode{})), UnsupportedModeError);
  EXPECT_THROW(Codebook(Matrix{{1, 0}}, SoftMode{0.0}), InputError);
  EXPECT_THROW(Codebook(Matrix{{1, 0}}, SoftMode{-1.0}), InputError);
  EXPECT_THROW(Codebook(Matrix(0, 2)), InputError);
  EXPECT_THROW(axes(HardMode{}).temperature(), UnsupportedModeError);
}

TEST(HardAssign, OneHotAtBestCosine) {
  const Assignment a = hard_assign(Vector{0.2, 3}, axes());
  EXPECT_EQ(a.weights, (Vector{0, 1}));
}

TEST(HardAssign, TiesGoToLowestIndex) {
  EXPECT_EQ(hard_assign(Vector{1, 1}, axes()).weights, (Vector{1, 0}));
  const Codebook dup(Matrix{{0, 1}, {1, 0}, {1, 0}}, HardMode{});
  EXPECT_EQ(hard_assign(Vector{5, 0}, dup).weights, (Vector{0, 1, 0}));
}

TEST(Codebook, RowsAreNormalized) {
  const Codebook cb(Matrix{{3, 4}, {0, -2}});
  EXPECT_DOUBLE_EQ(cb.words()(0, 0), 0.6);
  EXPECT_DOUBLE_EQ(cb.words()(0, 1), 0.8);
  EXPECT_DOUBLE_EQ(cb.words()(1, 1), -1.0);
}

TEST(InitCodebook, RecoversTwoClusters) {
  Rng rng(1);
  const Vector a = l2_normalize(random_normal(8, rng)), b = l2_normalize(random_normal(8, rng));
  FeatureSet fs(8, 60);
  for (std::size_t m = 0; m < 60; ++m) {
    const Vector& c = m % 2 ? a : b;
    const Vector noise = random_normal(8, rng, 0.02);
    for (std::size_t k = 0; k < 8; ++k) fs.column(m)[k] = c[k] + noise[k];
  }
  const Codebook cb = init_codebook(std::vector<FeatureSet>{fs}, 2, 7);
  EXPECT_GT(min_abs_cos(cb, a.span()), 0.999);
  EXPECT_GT(min_abs_cos(cb, b.span()), 0.999);
}

TEST(InitCodebook, DistinctPointsAreAFixedPoint) {
  // N well-separated directions repeated: every codeword lands exactly on one.
  const Matrix dirs{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  FeatureSet fs(3, 9);
  for (std::size_t m = 0; m < 9; ++m)
    for (std::size_t k = 0; k < 3; ++k) fs.column(m)[k] = dirs(m % 3, k) * (1.0 + m);
  const Codebook cb = init_codebook(std::vector<FeatureSet>{fs}, 3, 0);
  std::vector<int> hit(3, 0);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t r = 0; r < 3; ++r)
      if (std::abs(dot(cb.words().row(j), dirs.row(r)) - 1.0) < 1e-12) ++hit[r];
  EXPECT_EQ(hit, (std::vector<int>{1, 1, 1}));
}

TEST(InitCodebook, DeterministicPerSeed) {
  Rng rng(2);
  const std::vector<FeatureSet> fs{FeatureSet::from_locations(random_normal(40, 5, rng)),
                                   FeatureSet::from_locations(random_normal(25, 5, rng))};
  EXPECT_EQ(init_codebook(fs, 4, 99), init_codebook(fs, 4, 99));
  EXPECT_NE(init_codebook(fs, 4, 99), init_codebook(fs, 4, 100));
}

TEST(InitCodebook, CodewordsAreUnit) {
  Rng rng(6);
  const std::vector<FeatureSet> fs{FeatureSet::from_locations(random_normal(30, 4, rng))};
  const Codebook cb = init_codebook(fs, 5, 1);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(norm2(cb.words().row(j)), 1.0, 1e-14);
}

TEST(InitCodebook, TooFewColumnsThrows) {
  const std::vector<FeatureSet> fs{FeatureSet(3, 2)};
  EXPECT_THROW(init_codebook(fs, 3, 0), InputError);
  EXPECT_THROW(init_codebook(fs, 0, 0), InputError);
}

TEST(InitCodebook, ZeroLloydIterationsKeepsSeeding) {
  Rng rng(12);
  const std::vector<FeatureSet> fs{FeatureSet::from_locations(random_normal(20, 3, rng))};
  const Codebook cb = init_codebook(fs, 3, 5, {0, SoftMode{}});
  // Every codeword is one of the normalized input points.
  for (std::size_t j = 0; j < 3; ++j) {
    bool found = false;
    for (std::size_t m = 0; m < 20; ++m) {
      const Vector u = l2_normalize(fs[0].column(m));
      found = found || std::abs(dot(u.span(), cb.words().row(j)) - 1.0) < 1e-12;
    }
    EXPECT_TRUE(found);
  }
}
