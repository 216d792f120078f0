#pragma once

// The trainable embedding pipeline:
//   raw features -> reduction + l2 -> pooling kernel -> optional l2 -> z
// ModelParams owns every tensor and exposes them by name so the optimizer,
// the gradient checker and the checkpoint code all iterate one list.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jcf/codebook.hpp"
#include "jcf/method.hpp"
#include "jcf/pooling.hpp"
#include "jcf/rng.hpp"

namespace jcf {

struct ModelConfig {
  Method method = Method::JcfShared;
  std::size_t d_in = 128;
  std::size_t d = 32;        // reduced feature dimension
  std::size_t out_dim = 32;  // D
  std::size_t n_words = 8;   // N
  std::size_t rank = 4;      // R
  double temperature = 0.1;
  bool hard_assignment = false;
  bool dual_codebook = false;
  bool normalize_output = true;
  double eps = kDefaultEps;

  // Dimension of the features entering the pooling kernel.
  std::size_t pooled_dim() const { return method == Method::Baseline ? out_dim : d; }

  void validate() const {
    if (method == Method::BP || method == Method::BPCodebook)
      throw InputError("model: method '" + std::string(to_string(method)) +
                       "' is cost-model only and cannot be trained");
    if (d_in == 0 || out_dim == 0 || (method != Method::Baseline && d == 0))
      throw InputError("model: dimensions must be positive");
    if (uses_codebook(method) && n_words == 0) throw InputError("model: N must be >= 1");
    if (method == Method::JcfShared && (rank == 0 || rank > n_words))
      throw InputError("model: JCF-N-R requires 1 <= R <= N");
    if (!hard_assignment && !(temperature > 0.0)) throw InputError("model: temperature must be > 0");
    if (!(eps > 0.0)) throw InputError("model: eps must be > 0");
  }

  AssignMode assign_mode() const {
    return hard_assignment ? AssignMode{HardMode{}} : AssignMode{SoftMode{temperature}};
  }
};

// Named view of one parameter tensor.
struct TensorRef {
  std::string_view name;
  std::span<double> data;
  std::vector<std::size_t> shape;
};

struct ConstTensorRef {
  ConstTensorRef(std::string_view n, std::span<const double> d, std::vector<std::size_t> s)
      : name(n), data(d), shape(std::move(s)) {}
  ConstTensorRef(const TensorRef& t) : name(t.name), data(t.data), shape(t.shape) {}

  std::string_view name;
  std::span<const double> data;
  std::vector<std::size_t> shape;
};

struct ModelParams {
  ModelConfig config;
  Matrix reduction;  // d_in x pooled_dim
  Codebook codebook;
  Codebook codebook_q;  // only with dual_codebook
  Rank1Params rank1;
  JcfParams jcf;
  JcfSharedParams shared;

  const Codebook& codebook_p() const { return codebook; }
  const Codebook& codebook_second() const {
    return config.dual_codebook ? codebook_q : codebook;
  }

  // Visits every non-empty tensor in a fixed order.
  template <typename F>
  void for_each_tensor(F&& f) {
    visit_impl<TensorRef>(*this, f);
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    visit_impl<ConstTensorRef>(*this, f);
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    for_each_tensor([&](const ConstTensorRef& t) { n += t.data.size(); });
    return n;
  }

  bool operator==(const ModelParams& o) const {
    return reduction == o.reduction && codebook == o.codebook && codebook_q == o.codebook_q &&
           rank1.u == o.rank1.u && rank1.v == o.rank1.v && jcf.u_set == o.jcf.u_set &&
           jcf.v_set == o.jcf.v_set && shared.u_shared == o.shared.u_shared &&
           shared.v_shared == o.shared.v_shared && shared.a == o.shared.a && shared.b == o.shared.b;
  }

 private:
  template <typename Ref, typename Self, typename F>
  static void visit_impl(Self& self, F& f) {
    auto mat = [&](std::string_view name, auto& m) {
      if (!m.empty()) f(Ref{name, m.span(), {m.rows(), m.cols()}});
    };
    auto ten = [&](std::string_view name, auto& t) {
      if (!t.empty()) f(Ref{name, t.span(), {t.count(), t.rows(), t.cols()}});
    };
    mat("reduction", self.reduction);
    mat("codebook", self.codebook.words());
    mat("codebook_q", self.codebook_q.words());
    mat("u", self.rank1.u);
    mat("v", self.rank1.v);
    ten("u_set", self.jcf.u_set);
    ten("v_set", self.jcf.v_set);
    ten("u_shared", self.shared.u_shared);
    ten("v_shared", self.shared.v_shared);
    mat("a", self.shared.a);
    mat("b", self.shared.b);
  }
};

// Random parameters with a random codebook; used by tests and the gradient
// checker where no training data exists.
inline ModelParams random_model(const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  ModelParams p;
  p.config = cfg;
  const std::size_t d = cfg.pooled_dim(), big_d = cfg.out_dim, n = cfg.n_words, r = cfg.rank;
  p.reduction = random_normal(cfg.d_in, d, rng, 1.0 / std::sqrt(double(cfg.d_in)));
  if (uses_codebook(cfg.method)) {
    p.codebook = Codebook(random_normal(n, d, rng), cfg.assign_mode());
    if (cfg.dual_codebook) p.codebook_q = Codebook(random_normal(n, d, rng), cfg.assign_mode());
  }
  const double proj_std = 1.0 / std::sqrt(double(d));
  switch (cfg.method) {
    case Method::Factorized:
      p.rank1.u = random_normal(big_d, d, rng, proj_std);
      p.rank1.v = random_normal(big_d, d, rng, proj_std);
      break;
    case Method::Jcf:
      p.jcf.u_set = random_normal(big_d, d, n, rng, proj_std);
      p.jcf.v_set = random_normal(big_d, d, n, rng, proj_std);
      break;
    case Method::JcfShared:
      p.shared.u_shared = random_normal(big_d, d, r, rng, proj_std);
      p.shared.v_shared = random_normal(big_d, d, r, rng, proj_std);
      p.shared.a = random_normal(n, r, rng, 1.0 / std::sqrt(double(r)));
      p.shared.b = random_normal(n, r, rng, 1.0 / std::sqrt(double(r)));
      break;
    default:
      break;
  }
  return p;
}

// Training initialization: random projectors, codebook seeded by k-means++
// on the reduced training features.
inline ModelParams init_model(const ModelConfig& cfg, std::span<const FeatureSet> train_raw,
                              const SeedSplitter& seeds, std::size_t lloyd_iterations = 10) {
  Rng rng = seeds.stream("init");
  ModelParams p = random_model(cfg, rng);
  if (uses_codebook(cfg.method)) {
    std::vector<FeatureSet> reduced;
    reduced.reserve(train_raw.size());
    for (const auto& raw : train_raw) reduced.push_back(reduce_features(raw, p.reduction, cfg.eps));
    CodebookInitOptions opts{lloyd_iterations, cfg.assign_mode()};
    p.codebook = init_codebook(reduced, cfg.n_words, seeds.seed_for("codebook"), opts);
    if (cfg.dual_codebook)
      p.codebook_q = init_codebook(reduced, cfg.n_words, seeds.seed_for("codebook", 1), opts);
  }
  return p;
}

// Pooled, un-normalized representation of already-reduced features.
inline Representation pool(const ModelParams& p, const FeatureSet& xs, OpCounts* counts = nullptr) {
  switch (p.config.method) {
    case Method::Baseline:
      return first_order_pool(xs);
    case Method::Factorized:
      return rank1_pool(xs, p.rank1, counts);
    case Method::Jcf:
      return jcf_pool(xs, p.codebook_p(), p.codebook_second(), p.jcf, counts);
    case Method::JcfShared:
      return jcf_shared_pool(xs, p.codebook_p(), p.codebook_second(), p.shared, counts);
    default:
      throw InputError("pool: method is not trainable");
  }
}

// Full forward pass producing the embedding used by the loss and retrieval.
inline Representation embed(const ModelParams& p, const FeatureSet& raw, OpCounts* counts = nullptr) {
  const FeatureSet xs = reduce_features(raw, p.reduction, p.config.eps, counts);
  Representation z = pool(p, xs, counts);
  if (p.config.normalize_output) z.values = l2_normalize(z.values, p.config.eps);
  return z;
}

}  // namespace jcf
