#pragma once

// Desk-scale training and evaluation loop:
//   sample instance pairs -> embed -> mine semi-hard -> triplet loss
//   -> backward -> SGD.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "jcf/dataset.hpp"
#include "jcf/grad.hpp"
#include "jcf/metric.hpp"
#include "jcf/recall.hpp"

namespace jcf {

struct TrainConfig {
  ModelConfig model;
  double lr = 1e-5;
  std::size_t batch = 64;
  std::size_t steps = 200;
  double margin = 0.1;
  std::size_t lloyd_iterations = 10;
  FreezeSet frozen;
  std::uint64_t seed = 0;

  void validate() const {
    model.validate();
    if (!(lr >= 0.0)) throw InputError("train: lr must be >= 0");
    if (batch < 2 || batch % 2 != 0) throw InputError("train: batch size must be even and >= 2");
    if (!(margin > 0.0)) throw InputError("train: margin must be positive");
  }
};

struct StepLog {
  std::size_t step = 0;
  double loss = 0.0;
  double lr = 0.0;
  std::uint64_t seed = 0;
  std::size_t triplets = 0;
};

struct TrainResult {
  ModelParams initial;
  ModelParams params;
  std::vector<StepLog> log;
  std::size_t steps_done = 0;
  std::size_t epoch = 0;
};

// Raised when a step produces a non-finite loss; carries the batch for the dump.
class NonFiniteLoss : public NumericError {
 public:
  NonFiniteLoss(std::size_t step, std::vector<std::size_t> batch, double loss)
      : NumericError("loss", "train: non-finite loss " + std::to_string(loss) + " at step " +
                                 std::to_string(step)),
        step_(step),
        batch_(std::move(batch)),
        loss_(loss) {}
  std::size_t step() const noexcept { return step_; }
  const std::vector<std::size_t>& batch() const noexcept { return batch_; }
  double loss() const noexcept { return loss_; }

 private:
  std::size_t step_;
  std::vector<std::size_t> batch_;
  double loss_;
};

namespace detail {

// B/2 instances (distinct while enough exist), two distinct samples of each.
inline std::vector<std::size_t> sample_batch(const std::vector<std::vector<std::size_t>>& by_instance,
                                             std::size_t batch, Rng& rng) {
  std::vector<std::size_t> eligible;
  for (std::size_t c = 0; c < by_instance.size(); ++c)
    if (by_instance[c].size() >= 2) eligible.push_back(c);
  if (eligible.empty()) throw InputError("train: no instance has two training samples");

  std::vector<std::size_t> picked;
  std::vector<std::size_t> order = eligible;
  while (picked.size() < batch / 2) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t c : order) {
      if (picked.size() == batch / 2) break;
      picked.push_back(c);
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t c : picked) {
    const auto& pool = by_instance[c];
    std::uniform_int_distribution<std::size_t> first(0, pool.size() - 1), second(0, pool.size() - 2);
    const std::size_t i = first(rng);
    std::size_t j = second(rng);
    if (j >= i) ++j;
    out.push_back(pool[i]);
    out.push_back(pool[j]);
  }
  return out;
}

}  // namespace detail

inline Matrix embed_all(const ModelParams& p, const std::vector<Sample>& samples) {
  Matrix out(samples.size(), p.config.out_dim);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Representation z = embed(p, samples[i].features);
    std::copy(z.values.begin(), z.values.end(), out.row(i).begin());
  }
  return out;
}

// Recall@K over the held-out split, which serves as both query and gallery.
inline EvalResult evaluate(const ModelParams& p, const std::vector<Sample>& test,
                           const std::vector<std::size_t>& ks) {
  const Matrix e = embed_all(p, test);
  std::vector<Label> labels;
  for (const auto& s : test) labels.push_back(s.label);
  return recall_at_k(e, labels, e, labels, ks, /*same_set=*/true);
}

using StepCallback = std::function<void(const StepLog&)>;

inline TrainResult train(const TrainConfig& cfg, const Dataset& data, const StepCallback& on_step = {}) {
  cfg.validate();
  if (data.train.empty()) throw InputError("train: empty training split");
  const SeedSplitter seeds(cfg.seed);

  TrainResult result;
  const std::vector<FeatureSet> raw = data.train_features();
  result.params = init_model(cfg.model, raw, seeds, cfg.lloyd_iterations);
  result.initial = result.params;

  std::vector<Label> labels;
  for (const auto& s : data.train) labels.push_back(s.label);
  std::vector<Label> distinct = labels;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<std::vector<std::size_t>> by_instance(distinct.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto c = std::lower_bound(distinct.begin(), distinct.end(), labels[i]) - distinct.begin();
    by_instance[static_cast<std::size_t>(c)].push_back(i);
  }

  ModelParams& params = result.params;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    Rng batch_rng = seeds.stream("batching", step);
    const std::vector<std::size_t> members = detail::sample_batch(by_instance, cfg.batch, batch_rng);

    Batch batch{Matrix(members.size(), cfg.model.out_dim), {}};
    for (std::size_t b = 0; b < members.size(); ++b) {
      const Representation z = embed(params, data.train[members[b]].features);
      std::copy(z.values.begin(), z.values.end(), batch.embeddings.row(b).begin());
      batch.labels.push_back(data.train[members[b]].label);
    }
    const PairList pairs = build_pairs(batch.labels, seeds.seed_for("pairs", step));
    const MiningResult mined = mine_semi_hard(batch, pairs, cfg.margin);
    const LossResult loss = triplet_loss(batch, mined.triplets, cfg.margin);
    const double checked = all_finite(batch.embeddings.span()) ? loss.loss : NAN;
    if (!std::isfinite(checked)) throw NonFiniteLoss(step, members, checked);

    GradientBundle grads = GradientBundle::zeros_like(params);
    for (std::size_t b = 0; b < members.size(); ++b) {
      auto row = loss.d_embeddings.row(b);
      if (std::all_of(row.begin(), row.end(), [](double v) { return v == 0.0; })) continue;
      Vector upstream(std::vector<double>(row.begin(), row.end()));
      grads += model_backward(params, data.train[members[b]].features, upstream);
    }
    sgd_step(params, grads, cfg.lr, cfg.frozen);

    StepLog entry{step, loss.loss, cfg.lr, cfg.seed, mined.triplets.size()};
    result.log.push_back(entry);
    if (on_step) on_step(entry);
    result.steps_done = step + 1;
  }
  result.epoch = result.steps_done * cfg.batch / data.train.size();
  return result;
}

}  // namespace jcf
