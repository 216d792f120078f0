#pragma once

// Self-verification suites behind `jcf check`.
//   oracle: each efficient kernel against an explicit reference built from
//           materialized projections, over random small instances.
//   grad:   finite-difference check of model_backward over a run of seeds.
//   cost:   parameter table and stage accounting against instrumented kernels.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "json.hpp"
#include "jcf/cost_model.hpp"
#include "jcf/grad.hpp"

namespace jcf {

struct CaseResult {
  std::string name;
  std::size_t instances = 0;
  double max_error = 0.0;  // suite-specific: relative error, or mismatches
  bool pass = false;
  std::string detail;
};

struct SuiteReport {
  std::string suite;
  std::uint64_t seed = 0;
  std::vector<CaseResult> cases;
  bool pass = false;

  nlohmann::json to_json() const {
    nlohmann::json j{{"schema", 1}, {"suite", suite}, {"seed", seed}, {"pass", pass}};
    j["cases"] = nlohmann::json::array();
    for (const auto& c : cases)
      j["cases"].push_back({{"name", c.name},
                            {"instances", c.instances},
                            {"max_error", c.max_error},
                            {"pass", c.pass},
                            {"detail", c.detail}});
    return j;
  }
};

inline constexpr double kOracleTolerance = 1e-10;
inline constexpr std::size_t kOracleInstances = 100;
inline constexpr std::size_t kGradSeeds = 20;

// max |a - b| / max |b|
inline double relative_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return INFINITY;
  double diff = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    diff = std::max(diff, std::abs(a[k] - b[k]));
    scale = std::max(scale, std::abs(b[k]));
  }
  return diff / std::max(scale, 1e-300);
}

namespace detail {

inline std::size_t uniform(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline Codebook random_codebook(std::size_t n, std::size_t d, Rng& rng) {
  const double tau = std::uniform_real_distribution<double>(0.1, 1.0)(rng);
  return Codebook(random_normal(n, d, rng), SoftMode{tau});
}

// p_i = sum_j e^(j) (x) u_{i,j}, laid out to match the h (x) x ordering.
inline Vector stacked_projector(const Tensor3& set, std::size_t i) {
  const std::size_t d = set.rows(), n = set.cols();
  Vector p(n * d);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < d; ++k) p[j * d + k] = set(i, k, j);
  return p;
}

// Column i of the result is kron(a_i, b_i).
inline Matrix kron_columns(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  const std::size_t rows = a.front().dim() * b.front().dim();
  Matrix w(rows, a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Vector col = kron(a[i], b[i]);
    for (std::size_t r = 0; r < rows; ++r) w(r, i) = col[r];
  }
  return w;
}

// U_i = U~_i A^T
inline Tensor3 expand_shared(const Tensor3& shared, const Matrix& a) {
  Tensor3 out(shared.count(), shared.rows(), a.rows());
  for (std::size_t i = 0; i < shared.count(); ++i) {
    const Matrix full = matmul(shared.slice_matrix(i), a.transpose());
    std::copy(full.span().begin(), full.span().end(), out.slice(i).begin());
  }
  return out;
}

}  // namespace detail

inline SuiteReport oracle_suite(std::uint64_t seed, std::size_t instances = kOracleInstances) {
  const SeedSplitter seeds(seed);
  SuiteReport rep{"oracle", seed, {}, true};
  auto finish = [&](CaseResult c) {
    c.pass = c.max_error < kOracleTolerance;
    rep.pass = rep.pass && c.pass;
    rep.cases.push_back(std::move(c));
  };

  {  // sum of outer products vs X X^T
    CaseResult c{"bp_full_vs_gram", instances, 0.0, false, {}};
    Rng rng = seeds.stream("bp_full");
    for (std::size_t t = 0; t < instances; ++t) {
      const std::size_t d = detail::uniform(rng, 1, 6), m = detail::uniform(rng, 1, 8);
      const Matrix x = random_normal(d, m, rng);
      const Vector y = bp_full(FeatureSet::from_columns(x));
      const Matrix gram = matmul(x, x.transpose());
      c.max_error = std::max(c.max_error, relative_error(y.span(), gram.span()));
    }
    finish(std::move(c));
  }
  {  // rank-1 factors vs projection with W columns kron(u_i, v_i)
    CaseResult c{"rank1_vs_full_projection", instances, 0.0, false, {}};
    Rng rng = seeds.stream("rank1");
    for (std::size_t t = 0; t < instances; ++t) {
      const std::size_t d = detail::uniform(rng, 1, 6), big_d = detail::uniform(rng, 1, 4),
                        m = detail::uniform(rng, 1, 8);
      const Rank1Params p{random_normal(big_d, d, rng), random_normal(big_d, d, rng)};
      const FeatureSet xs = FeatureSet::from_locations(random_normal(m, d, rng));
      std::vector<Vector> us, vs;
      for (std::size_t i = 0; i < big_d; ++i) {
        us.emplace_back(std::vector<double>(p.u.row(i).begin(), p.u.row(i).end()));
        vs.emplace_back(std::vector<double>(p.v.row(i).begin(), p.v.row(i).end()));
      }
      const Representation fast = rank1_pool(xs, p);
      const Representation ref = project_so(xs, FullProjection{detail::kron_columns(us, vs)});
      c.max_error = std::max(c.max_error, relative_error(fast.values.span(), ref.values.span()));
    }
    finish(std::move(c));
  }
  {  // JCF-N vs codebook bilinear pooling with w_i = p_i (x) q_i
    CaseResult c{"jcf_vs_codebook_bilinear", instances, 0.0, false, {}};
    Rng rng = seeds.stream("jcf");
    for (std::size_t t = 0; t < instances; ++t) {
      const std::size_t d = detail::uniform(rng, 1, 6), n = detail::uniform(rng, 1, 4),
                        big_d = detail::uniform(rng, 1, 4), m = detail::uniform(rng, 1, 8);
      const bool dual = t % 2 == 1;
      const Codebook cb_p = detail::random_codebook(n, d, rng);
      const Codebook cb_q = dual ? detail::random_codebook(n, d, rng) : cb_p;
      const JcfParams p{random_normal(big_d, d, n, rng), random_normal(big_d, d, n, rng)};
      const FeatureSet xs = FeatureSet::from_locations(random_normal(m, d, rng));
      std::vector<Vector> ps, qs;
      for (std::size_t i = 0; i < big_d; ++i) {
        ps.push_back(detail::stacked_projector(p.u_set, i));
        qs.push_back(detail::stacked_projector(p.v_set, i));
      }
      const Matrix w = detail::kron_columns(ps, qs);
      const Representation fast = dual ? jcf_pool(xs, cb_p, cb_q, p) : jcf_pool(xs, cb_p, p);
      const Representation ref = dual ? codebook_bp_naive(xs, cb_p, cb_q, w) : codebook_bp_naive(xs, cb_p, w);
      c.max_error = std::max(c.max_error, relative_error(fast.values.span(), ref.values.span()));
    }
    finish(std::move(c));
  }
  {  // JCF-N-R vs JCF-N with U_i = U~_i A^T, V_i = V~_i B^T
    CaseResult c{"jcf_shared_vs_jcf", instances, 0.0, false, {}};
    Rng rng = seeds.stream("jcf_shared");
    for (std::size_t t = 0; t < instances; ++t) {
      const std::size_t d = detail::uniform(rng, 1, 6), n = detail::uniform(rng, 1, 4);
      const std::size_t r = detail::uniform(rng, 1, n), big_d = detail::uniform(rng, 1, 4),
                        m = detail::uniform(rng, 1, 8);
      const bool dual = t % 2 == 1;
      const Codebook cb_p = detail::random_codebook(n, d, rng);
      const Codebook cb_q = dual ? detail::random_codebook(n, d, rng) : cb_p;
      const JcfSharedParams p{random_normal(big_d, d, r, rng), random_normal(big_d, d, r, rng),
                              random_normal(n, r, rng), random_normal(n, r, rng)};
      const JcfParams full{detail::expand_shared(p.u_shared, p.a), detail::expand_shared(p.v_shared, p.b)};
      const FeatureSet xs = FeatureSet::from_locations(random_normal(m, d, rng));
      const Representation fast = dual ? jcf_shared_pool(xs, cb_p, cb_q, p) : jcf_shared_pool(xs, cb_p, p);
      const Representation ref = dual ? jcf_pool(xs, cb_p, cb_q, full) : jcf_pool(xs, cb_p, full);
      c.max_error = std::max(c.max_error, relative_error(fast.values.span(), ref.values.span()));
    }
    finish(std::move(c));
  }
  return rep;
}

// Seeds seed .. seed+n-1, all reported.
inline SuiteReport grad_suite(std::uint64_t seed, std::size_t n_seeds = kGradSeeds,
                              FdCheckConfig cfg = {}) {
  SuiteReport rep{"grad", seed, {}, true};
  for (std::size_t s = 0; s < n_seeds; ++s) {
    const FdCheckReport fd = finite_diff_check(cfg, seed + s);
    CaseResult c{"seed_" + std::to_string(seed + s), 1, fd.max_rel_error, fd.pass, {}};
    for (const auto& t : fd.tensors) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "%s%s=%.2e", c.detail.empty() ? "" : " ", t.name.c_str(), t.max_rel_error);
      c.detail += buf;
    }
    rep.pass = rep.pass && c.pass;
    rep.cases.push_back(std::move(c));
  }
  return rep;
}

// Instrumented kernel counts must equal M * per_location + fixed.
inline OpCounts expected_counts(const CostReport& c, std::uint64_t locations) {
  return c.per_location.scaled(locations) + c.fixed;
}

inline SuiteReport cost_suite(std::uint64_t seed) {
  SuiteReport rep{"cost", seed, {}, true};
  auto finish = [&](CaseResult c) {
    c.pass = c.max_error == 0.0;
    rep.pass = rep.pass && c.pass;
    rep.cases.push_back(std::move(c));
  };

  {
    CaseResult c{"table1_params", 0, 0.0, false, {}};
    for (const auto& col : table1_columns()) {
      ++c.instances;
      const std::uint64_t count = param_count(col.config);
      if (!matches_printed(count, col.printed)) {
        c.max_error += 1;
        c.detail += col.label + ": " + std::to_string(count) + " vs " + col.printed + "; ";
      }
    }
    finish(std::move(c));
  }
  {  // Sharing adds 2NR parameters and saves 2(N-R)dD.
    CaseResult c{"sharing_overhead", 0, 0.0, false, {}};
    for (std::uint64_t n : {2u, 4u, 8u, 16u, 32u})
      for (std::uint64_t r = 1; r <= n; r *= 2) {
        ++c.instances;
        const PoolingConfig shared{Method::JcfShared, 2048, 256, 512, n, r};
        const PoolingConfig full{Method::Jcf, 2048, 256, 512, n, 0};
        const PoolingConfig factor{Method::Factorized, 2048, 256, 512, 0, 0};
        const auto ps = param_count(shared), pj = param_count(full), pf = param_count(factor);
        const bool ok = ps + 2 * (n - r) * 256 * 512 == pj + 2 * n * r &&
                        ps - pf == 2 * (r - 1) * 256 * 512 + 2 * n * r + n * 256;
        if (!ok) c.max_error += 1;
      }
    finish(std::move(c));
  }
  {  // instrumented kernels vs closed form
    CaseResult c{"instrumented_counts", 0, 0.0, false, {}};
    Rng rng = SeedSplitter(seed).stream("cost");
    const std::size_t d = 5, big_d = 3, n = 4, m = 7, d_in = 9;
    const FeatureSet raw = FeatureSet::from_locations(random_normal(m, d_in, rng));
    const FeatureSet xs = FeatureSet::from_locations(random_normal(m, d, rng));
    const Codebook cb(random_normal(n, d, rng));
    auto compare = [&](const std::string& what, const PoolingConfig& pc, const OpCounts& got) {
      ++c.instances;
      if (!(got == expected_counts(flops_estimate(pc), m))) {
        c.max_error += 1;
        c.detail += what + " mismatch; ";
      }
    };
    {
      OpCounts k;
      project_so(xs, FullProjection{random_normal(d * d, big_d, rng)}, &k);
      compare("bp", {Method::BP, d_in, d, big_d, 0, 0}, k);
    }
    {
      OpCounts k;
      codebook_bp_naive(xs, cb, random_normal(n * n * d * d, big_d, rng), &k);
      compare("bp_codebook", {Method::BPCodebook, d_in, d, big_d, n, 0}, k);
    }
    {
      OpCounts k;
      rank1_pool(xs, {random_normal(big_d, d, rng), random_normal(big_d, d, rng)}, &k);
      compare("factorized", {Method::Factorized, d_in, d, big_d, 0, 0}, k);
    }
    {
      OpCounts k;
      jcf_pool(xs, cb, {random_normal(big_d, d, n, rng), random_normal(big_d, d, n, rng)}, &k);
      compare("jcf", {Method::Jcf, d_in, d, big_d, n, 0}, k);
    }
    for (std::size_t r = 1; r <= n; ++r) {
      OpCounts k;
      jcf_shared_pool(xs, cb,
                      {random_normal(big_d, d, r, rng), random_normal(big_d, d, r, rng),
                       random_normal(n, r, rng), random_normal(n, r, rng)},
                      &k);
      compare("jcf_shared R=" + std::to_string(r), {Method::JcfShared, d_in, d, big_d, n, r}, k);
    }
    {
      OpCounts k;
      reduce_features(raw, random_normal(d_in, d, rng), kDefaultEps, &k);
      ++c.instances;
      if (k.reduction != m * flops_estimate({Method::Jcf, d_in, d, big_d, n, 0}).reduction_per_location) {
        c.max_error += 1;
        c.detail += "reduction mismatch; ";
      }
    }
    finish(std::move(c));
  }
  {  // Projector work of JCF-N-R is R/N that of JCF-N.
    CaseResult c{"projector_ratio", 0, 0.0, false, {}};
    for (std::uint64_t n : {4u, 8u, 16u, 32u})
      for (std::uint64_t r = 1; r <= n; ++r) {
        ++c.instances;
        const auto js = flops_estimate({Method::JcfShared, 2048, 256, 512, n, r}).per_location;
        const auto jf = flops_estimate({Method::Jcf, 2048, 256, 512, n, 0}).per_location;
        if (js.projector * n != jf.projector * r || js.contraction * n != jf.contraction * r) c.max_error += 1;
      }
    finish(std::move(c));
  }
  return rep;
}

inline SuiteReport run_suite(const std::string& name, std::uint64_t seed) {
  if (name == "oracle") return oracle_suite(seed);
  if (name == "grad") return grad_suite(seed);
  if (name == "cost") return cost_suite(seed);
  throw InputError("check: unknown suite '" + name + "' (expected oracle, grad or cost)");
}

}  // namespace jcf
