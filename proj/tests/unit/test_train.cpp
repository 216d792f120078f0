#include <gtest/gtest.h>

#include <numeric>

#include "jcf/config.hpp"
#include "jcf/train.hpp"

using namespace jcf;

namespace {

// Mirrors configs/desk.json.
RunConfig desk(std::uint64_t seed) {
  RunConfig c;
  c.model.method = Method::JcfShared;
  c.lr = 0.1;
  c.batch = 32;
  c.steps = 200;
  c.seed = seed;
  return c;
}

double window_mean(const std::vector<StepLog>& log, std::size_t from, std::size_t to) {
  double s = 0.0;
  for (std::size_t i = from; i < to; ++i) s += log[i].loss;
  return s / static_cast<double>(to - from);
}

Dataset tiny(std::size_t instances, std::uint64_t seed = 0) {
  SyntheticDatasetSpec s;
  s.n_instances = std::max<std::size_t>(instances, 2);
  s.samples_per_instance = 4;
  s.raw_dim = 10;
  s.locations = 4;
  s.seed = seed;
  Dataset d = generate_dataset(s);
  if (instances == 1) {
    std::erase_if(d.train, [](const Sample& x) { return x.label != 0; });
    std::erase_if(d.test, [](const Sample& x) { return x.label != 0; });
  }
  return d;
}

TrainConfig tiny_config() {
  TrainConfig t;
  t.model = {Method::JcfShared, 10, 4, 3, 3, 2};
  t.lr = 0.05;
  t.batch = 8;
  t.steps = 5;
  return t;
}

}  // namespace

TEST(Train, ZeroLearningRateLeavesParameters) {
  TrainConfig t = tiny_config();
  t.lr = 0.0;
  const TrainResult r = train(t, tiny(4));
  EXPECT_EQ(r.params, r.initial);
  EXPECT_EQ(r.log.size(), 5u);
}

TEST(Train, SingleInstanceHasNoTripletsAndNoUpdates) {
  const TrainResult r = train(tiny_config(), tiny(1));
  for (const auto& s : r.log) {
    EXPECT_EQ(s.loss, 0.0);
    EXPECT_EQ(s.triplets, 0u);
  }
  EXPECT_EQ(r.params, r.initial);
}

TEST(Train, BitwiseDeterministic) {
  const Dataset d = tiny(4);
  const TrainResult a = train(tiny_config(), d), b = train(tiny_config(), d);
  EXPECT_EQ(a.params, b.params);
  for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(a.log[i].loss, b.log[i].loss);
  TrainConfig other = tiny_config();
  other.seed = 1;
  EXPECT_NE(train(other, d).params, a.params);
}

TEST(Train, FrozenTensorsStayAtInitialization) {
  TrainConfig t = tiny_config();
  t.frozen = {"reduction", "codebook"};
  const TrainResult r = train(t, tiny(4));
  EXPECT_EQ(r.params.reduction, r.initial.reduction);
  EXPECT_EQ(r.params.codebook, r.initial.codebook);
  EXPECT_NE(r.params.shared.a, r.initial.shared.a);
}

TEST(Train, ConfigValidation) {
  TrainConfig t = tiny_config();
  t.batch = 7;
  EXPECT_THROW(train(t, tiny(4)), InputError);
  t = tiny_config();
  t.model.method = Method::BP;
  EXPECT_THROW(train(t, tiny(4)), InputError);
  t = tiny_config();
  t.model.rank = 4;
  EXPECT_THROW(train(t, tiny(4)), InputError);
  t = tiny_config();
  t.margin = 0.0;
  EXPECT_THROW(train(t, tiny(4)), InputError);
}

TEST(Train, OverflowingUpdateSurfacesAsNumericError) {
  TrainConfig t = tiny_config();
  t.lr = 1.7e308;
  try {
    train(t, tiny(4));
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_FALSE(e.tensor().empty());
  }
}

TEST(Train, NonFiniteInputSurfacesAsNonFiniteLoss) {
  Dataset d = tiny(4);
  for (auto& s : d.train) s.features = FeatureSet::from_locations(Matrix(4, 10, NAN));
  EXPECT_THROW(train(tiny_config(), d), NonFiniteLoss);
}

TEST(Train, DeskLossDecreasesInNineOfTenSeeds) {
  // Mean loss over steps [150, 200) below the mean over [0, 50).
  int decreasing = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const RunConfig cfg = desk(seed);
    const TrainResult r = train(cfg.to_train_config(), generate_dataset(cfg.dataset_spec()));
    ASSERT_EQ(r.log.size(), 200u);
    const double early = window_mean(r.log, 0, 50), late = window_mean(r.log, 150, 200);
    decreasing += late < early;
  }
  EXPECT_GE(decreasing, 9);
}

TEST(Evaluate, RecallMonotoneAndExhaustive) {
  const Dataset d = tiny(4);
  const TrainResult r = train(tiny_config(), d);
  const EvalResult e = evaluate(r.params, d.test, {1, 2, 4, 7});
  double prev = 0.0;
  for (const auto& [k, v] : e.recall_at) {
    EXPECT_GE(v, prev);
    prev = v;
  }
  // Gallery of 8 held-out samples minus self: K = 7 is exhaustive.
  EXPECT_DOUBLE_EQ(e.recall_at.at(7), 1.0);
}
