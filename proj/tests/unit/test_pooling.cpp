#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "jcf/pooling.hpp"
#include "jcf/rng.hpp"

using namespace jcf;

namespace {

double max_rel(const Vector& a, const Vector& b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < a.dim(); ++k) {
    diff = std::max(diff, std::abs(a[k] - b[k]));
    scale = std::max(scale, std::abs(b[k]));
  }
  return diff / std::max(scale, 1e-300);
}

FeatureSet random_features(std::size_t d, std::size_t m, Rng& rng) {
  return FeatureSet::from_locations(random_normal(m, d, rng));
}

FeatureSet permuted(const FeatureSet& xs, Rng& rng) {
  std::vector<std::size_t> order(xs.count());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  FeatureSet out(xs.dim(), xs.count());
  for (std::size_t m = 0; m < xs.count(); ++m)
    std::copy_n(xs.column(order[m]).begin(), xs.dim(), out.column(m).begin());
  return out;
}

struct Fixture {
  Rng rng{17};
  std::size_t d = 5, n = 3, r = 2, big_d = 4;
  Codebook cb{random_normal(3, 5, rng), SoftMode{0.2}};
  Codebook cb_q{random_normal(3, 5, rng), SoftMode{0.5}};
  Rank1Params rank1{random_normal(4, 5, rng), random_normal(4, 5, rng)};
  JcfParams jcf{random_normal(4, 5, 3, rng), random_normal(4, 5, 3, rng)};
  JcfSharedParams shared{random_normal(4, 5, 2, rng), random_normal(4, 5, 2, rng), random_normal(3, 2, rng),
                         random_normal(3, 2, rng)};

  std::vector<Vector> all(const FeatureSet& xs) const {
    return {bp_full(xs),
            rank1_pool(xs, rank1).values,
            first_order_pool(xs).values,
            jcf_pool(xs, cb, jcf).values,
            jcf_pool(xs, cb, cb_q, jcf).values,
            jcf_shared_pool(xs, cb, shared).values,
            jcf_shared_pool(xs, cb, cb_q, shared).values};
  }
};

}  // namespace

TEST(BpFull, SingleLocation) {
  const FeatureSet xs = FeatureSet::from_columns(Matrix{{1}, {2}});
  EXPECT_EQ(bp_full(xs), (Vector{1, 2, 2, 4}));
}

TEST(BpFull, IsSymmetricGram) {
  Rng rng(2);
  const FeatureSet xs = random_features(4, 6, rng);
  const Vector y = bp_full(xs);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(y[i * 4 + j], y[j * 4 + i]);
}

TEST(Rank1, HandExample) {
  const FeatureSet xs = FeatureSet::from_columns(Matrix{{2}, {3}});
  const Rank1Params p{Matrix{{1, 0}}, Matrix{{0, 1}}};
  EXPECT_DOUBLE_EQ(rank1_pool(xs, p).values[0], 6.0);
}

TEST(Rank1, IdenticalFactorsAreNonNegative) {
  Rng rng(3);
  const Matrix u = random_normal(6, 4, rng);
  const Representation z = rank1_pool(random_features(4, 5, rng), {u, u});
  for (double v : z.values) EXPECT_GE(v, 0.0);
}

TEST(Jcf, SingleCodewordCollapsesToRank1) {
  Rng rng(4);
  const FeatureSet xs = random_features(5, 7, rng);
  const Codebook cb(random_normal(1, 5, rng));
  const JcfParams p{random_normal(3, 5, 1, rng), random_normal(3, 5, 1, rng)};
  Rank1Params r{Matrix(3, 5), Matrix(3, 5)};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < 5; ++k) {
      r.u(i, k) = p.u_set(i, k, 0);
      r.v(i, k) = p.v_set(i, k, 0);
    }
  EXPECT_LT(max_rel(jcf_pool(xs, cb, p).values, rank1_pool(xs, r).values), 1e-13);
}

TEST(Jcf, HardAssignmentSelectsOneProjectorPerFeature) {
  const Codebook cb(Matrix{{1, 0}, {0, 1}}, HardMode{});
  JcfParams p{Tensor3(1, 2, 2), Tensor3(1, 2, 2)};
  // Codeword 0 uses (u, v) = (e0, e0), codeword 1 uses (e1, e1).
  p.u_set(0, 0, 0) = p.v_set(0, 0, 0) = 1.0;
  p.u_set(0, 1, 1) = p.v_set(0, 1, 1) = 1.0;
  const FeatureSet xs = FeatureSet::from_columns(Matrix{{3, 1}, {1, 2}});
  // x1 = (3,1) -> word 0 -> 3*3; x2 = (1,2) -> word 1 -> 2*2.
  EXPECT_DOUBLE_EQ(jcf_pool(xs, cb, p).values[0], 13.0);
}

TEST(JcfShared, IdentityRecombinationEqualsJcf) {
  Fixture f;
  Rng rng(5);
  const FeatureSet xs = random_features(5, 6, rng);
  const JcfSharedParams s{f.jcf.u_set, f.jcf.v_set, Matrix::identity(3), Matrix::identity(3)};
  EXPECT_LT(max_rel(jcf_shared_pool(xs, f.cb, s).values, jcf_pool(xs, f.cb, f.jcf).values), 1e-13);
}

TEST(Pooling, AdditiveOverLocations) {
  Fixture f;
  Rng rng(6);
  for (int t = 0; t < 10; ++t) {
    const FeatureSet a = random_features(5, 1 + t % 4, rng), b = random_features(5, 2 + t % 3, rng);
    const auto whole = f.all(FeatureSet::concat(a, b)), left = f.all(a), right = f.all(b);
    for (std::size_t k = 0; k < whole.size(); ++k) {
      Vector sum = left[k];
      for (std::size_t i = 0; i < sum.dim(); ++i) sum[i] += right[k][i];
      EXPECT_LT(max_rel(whole[k], sum), 1e-12) << "kernel " << k;
    }
  }
}

TEST(Pooling, PermutationInvariant) {
  Fixture f;
  Rng rng(7);
  const FeatureSet xs = random_features(5, 8, rng);
  const auto a = f.all(xs), b = f.all(permuted(xs, rng));
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_LT(max_rel(a[k], b[k]), 1e-12) << "kernel " << k;
}

TEST(Pooling, SharedCodebookOverloadMatchesDualWithCopy) {
  Fixture f;
  Rng rng(8);
  const FeatureSet xs = random_features(5, 4, rng);
  const Codebook copy = f.cb;
  EXPECT_EQ(jcf_pool(xs, f.cb, f.jcf).values, jcf_pool(xs, f.cb, copy, f.jcf).values);
  EXPECT_EQ(jcf_shared_pool(xs, f.cb, f.shared).values, jcf_shared_pool(xs, f.cb, copy, f.shared).values);
}

TEST(Pooling, SecondOrderIsSignInvariant) {
  Fixture f;
  Rng rng(9);
  FeatureSet xs = random_features(5, 3, rng);
  const Vector before = rank1_pool(xs, f.rank1).values;
  for (double& v : xs.locations().span()) v = -v;
  EXPECT_LT(max_rel(rank1_pool(xs, f.rank1).values, before), 1e-14);
}

TEST(Pooling, EmptyFeatureSetRejected) {
  Fixture f;
  const FeatureSet empty(5, 0);
  EXPECT_THROW(bp_full(empty), InputError);
  EXPECT_THROW(rank1_pool(empty, f.rank1), InputError);
  EXPECT_THROW(first_order_pool(empty), InputError);
  EXPECT_THROW(jcf_pool(empty, f.cb, f.jcf), InputError);
  EXPECT_THROW(jcf_shared_pool(empty, f.cb, f.shared), InputError);
}

TEST(Pooling, ShapeMismatchRejected) {
  Fixture f;
  Rng rng(10);
  const FeatureSet wrong = random_features(4, 3, rng);
  EXPECT_THROW(rank1_pool(wrong, f.rank1), ShapeError);
  EXPECT_THROW(jcf_pool(wrong, f.cb, f.jcf), ShapeError);
  EXPECT_THROW(jcf_shared_pool(wrong, f.cb, f.shared), ShapeError);
  EXPECT_THROW(project_so(wrong, FullProjection{Matrix(25, 2)}), ShapeError);
  const Codebook big(random_normal(4, 5, rng));
  EXPECT_THROW(jcf_pool(random_features(5, 2, rng), big, f.jcf), ShapeError);
}

TEST(NaiveCodebook, CapacityGuard) {
  Rng rng(11);
  const FeatureSet xs = random_features(256, 2, rng);
  const Codebook cb(random_normal(4, 256, rng));
  // Refused before any shape check or allocation of the N^2 d^2 projection.
  EXPECT_THROW(codebook_bp_naive(xs, cb, Matrix(1, 1)), CapacityError);
  // (N d)^2 exactly at the guard is allowed, one past it is not.
  const FeatureSet at = random_features(1000, 2, rng);
  EXPECT_NO_THROW(codebook_bp_naive(at, Codebook(random_normal(1, 1000, rng)), Matrix(1'000'000, 1)));
  const FeatureSet past = random_features(1001, 2, rng);
  EXPECT_THROW(codebook_bp_naive(past, Codebook(random_normal(1, 1001, rng)), Matrix(1, 1)), CapacityError);
}

TEST(NaiveCodebook, SingleWordEqualsBilinear) {
  Rng rng(12);
  const FeatureSet xs = random_features(3, 5, rng);
  const Codebook cb(random_normal(1, 3, rng));
  const Matrix w = random_normal(9, 2, rng);
  EXPECT_LT(max_rel(codebook_bp_naive(xs, cb, w).values, project_so(xs, FullProjection{w}).values), 1e-13);
}

TEST(Reduce, NormalizesColumns) {
  Rng rng(13);
  const FeatureSet raw = random_features(7, 4, rng);
  const FeatureSet xs = reduce_features(raw, random_normal(7, 3, rng));
  EXPECT_EQ(xs.dim(), 3u);
  for (std::size_t m = 0; m < 4; ++m) EXPECT_NEAR(norm2(xs.column(m)), 1.0, 1e-14);
  EXPECT_THROW(reduce_features(raw, Matrix(6, 3)), ShapeError);
}

TEST(Counts, InstrumentedKernelsAccumulate) {
  Fixture f;
  Rng rng(14);
  const FeatureSet xs = random_features(5, 6, rng);
  OpCounts c;
  jcf_shared_pool(xs, f.cb, f.shared, &c);
  EXPECT_EQ(c.recombination, 6u * 2 * 3 * 2);
  EXPECT_EQ(c.projector, 6u * 2 * 4 * 5 * 2);
  EXPECT_EQ(c.contraction, 6u * 2 * 4 * 2);
  EXPECT_EQ(c.product, 6u * 4);
  EXPECT_EQ(c.assignment, 3u * 5 + 6u * 5 * 4);
}
