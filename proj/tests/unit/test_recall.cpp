#include <gtest/gtest.h>

#include "jcf/recall.hpp"

using namespace jcf;

TEST(Recall, HandScoredFourPoints) {
  // Squared distances: A-B 1, A-C 4, A-D 1.44, B-C 5, B-D 0.04, C-D 5.44.
  const Matrix e{{0, 0}, {1, 0}, {0, 2}, {1.2, 0}};
  const std::vector<Label> l{0, 1, 0, 1};
  const EvalResult r = recall_at_k(e, l, e, l, {1, 2, 3, 5}, true);
  EXPECT_DOUBLE_EQ(r.recall_at.at(1), 0.75);
  EXPECT_DOUBLE_EQ(r.recall_at.at(2), 0.75);
  EXPECT_DOUBLE_EQ(r.recall_at.at(3), 1.0);
  EXPECT_DOUBLE_EQ(r.recall_at.at(5), 1.0);
  EXPECT_EQ(r.clamped_ks, (std::vector<std::size_t>{5}));
  EXPECT_EQ(r.n_queries, 4u);
}

TEST(Recall, ExactDuplicatesGivePerfectRecall) {
  Rng rng(1);
  const Matrix base = random_normal(5, 3, rng);
  Matrix e(10, 3);
  std::vector<Label> l;
  for (std::size_t i = 0; i < 10; ++i) {
    std::copy_n(base.row(i / 2).begin(), 3, e.row(i).begin());
    l.push_back(static_cast<Label>(i / 2));
  }
  EXPECT_DOUBLE_EQ(recall_at_k(e, l, e, l, {1}, true).recall_at.at(1), 1.0);
}

TEST(Recall, TiesBrokenByIndex) {
  // Query 0 is equidistant from 1 (wrong label) and 2 (right label): index 1 wins.
  const Matrix e{{0}, {1}, {-1}};
  const std::vector<Label> l{0, 1, 0};
  EXPECT_DOUBLE_EQ(recall_at_k(e, l, e, l, {1}, true).recall_at.at(1), 1.0 / 3.0);
}

TEST(Recall, SelfIsExcluded) {
  const Matrix e{{0}, {10}};
  const std::vector<Label> l{0, 1};
  EXPECT_DOUBLE_EQ(recall_at_k(e, l, e, l, {1}, true).recall_at.at(1), 0.0);
  EXPECT_DOUBLE_EQ(recall_at_k(e, l, e, l, {1}, false).recall_at.at(1), 1.0);
}

TEST(Recall, MonotoneInKAndExhaustiveKIsOne) {
  Rng rng(2);
  for (int t = 0; t < 10; ++t) {
    const Matrix e = random_normal(20, 4, rng);
    std::vector<Label> l;
    for (std::size_t i = 0; i < 20; ++i) l.push_back(static_cast<Label>(rng() % 5));
    // Make sure every label has at least two members.
    for (std::size_t i = 0; i < 10; ++i) l[i + 10] = l[i];
    const EvalResult r = recall_at_k(e, l, e, l, {1, 2, 4, 8, 19}, true);
    double prev = 0.0;
    for (const auto& [k, v] : r.recall_at) {
      EXPECT_GE(v, prev);
      EXPECT_LE(v, 1.0);
      prev = v;
    }
    EXPECT_DOUBLE_EQ(r.recall_at.at(19), 1.0);
  }
}

TEST(Recall, SeparateQueryAndGallery) {
  const Matrix q{{0}, {5}}, g{{0.1}, {4.9}, {10}};
  const EvalResult r = recall_at_k(q, {0, 1}, g, {1, 0, 1}, {1, 2}, false);
  EXPECT_DOUBLE_EQ(r.recall_at.at(1), 0.0);
  EXPECT_DOUBLE_EQ(r.recall_at.at(2), 1.0);
}

TEST(Recall, Errors) {
  const Matrix e{{0}, {1}};
  EXPECT_THROW(recall_at_k(e, {0, 0}, e, {0, 0}, {0}, true), InputError);
  EXPECT_THROW(recall_at_k(e, {0, 0}, Matrix(0, 1), {}, {1}, false), InputError);
  EXPECT_THROW(recall_at_k(e, {0}, e, {0, 0}, {1}, true), ShapeError);
  EXPECT_THROW(recall_at_k(e, {0, 0}, Matrix(2, 2), {0, 0}, {1}, false), ShapeError);
}
