#pragma once

// Second-order pooling kernels over a FeatureSet.
//
// Materialized paths (bp_full, project_so, codebook_bp_naive) build the
// d^2 or N^2 d^2 second-order vector and exist as oracles. Factorized paths
// (rank1_pool, jcf_pool, jcf_shared_pool) never form anything larger than
// max(d, N, R, D) per location.
//
// All kernels return the un-normalized sum over locations; output
// normalization belongs to the model pipeline.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "jcf/codebook.hpp"
#include "jcf/features.hpp"
#include "jcf/linalg.hpp"
#include "jcf/op_counts.hpp"

namespace jcf {

inline constexpr std::size_t kNaiveCapacity = 1'000'000;

// W in R^{d^2 x D}; column i is w_i.
struct FullProjection {
  Matrix w;
  std::size_t out_dim() const noexcept { return w.cols(); }
};

// Row i of u and v hold u_i and v_i (D x d each).
struct Rank1Params {
  Matrix u;
  Matrix v;
  std::size_t out_dim() const noexcept { return u.rows(); }
  std::size_t dim() const noexcept { return u.cols(); }
};

// Slice i of u_set is U_i in R^{d x N}; column j of U_i is u_{i,j}.
struct JcfParams {
  Tensor3 u_set;
  Tensor3 v_set;
  std::size_t out_dim() const noexcept { return u_set.count(); }
  std::size_t dim() const noexcept { return u_set.rows(); }
  std::size_t n_words() const noexcept { return u_set.cols(); }
};

// R shared projectors per output (d x R slices) recombined across the
// N codewords by A, B in R^{N x R}.
struct JcfSharedParams {
  Tensor3 u_shared;
  Tensor3 v_shared;
  Matrix a;
  Matrix b;
  std::size_t out_dim() const noexcept { return u_shared.count(); }
  std::size_t dim() const noexcept { return u_shared.rows(); }
  std::size_t rank() const noexcept { return u_shared.cols(); }
  std::size_t n_words() const noexcept { return a.rows(); }
};

struct Representation {
  Vector values;
  std::size_t dim() const noexcept { return values.dim(); }
  bool operator==(const Representation&) const = default;
};

namespace detail {

inline void require_locations(const FeatureSet& xs, const char* who) {
  if (xs.count() == 0) throw InputError(std::string(who) + ": feature set has no locations");
}

inline void require(bool ok, const char* who, const char* what) {
  if (!ok) throw ShapeError(std::string(who) + ": " + what);
}

}  // namespace detail

// y = sum_m x_m (x) x_m = vec(X X^T).
inline Vector bp_full(const FeatureSet& xs, OpCounts* counts = nullptr) {
  detail::require_locations(xs, "bp_full");
  const std::size_t d = xs.dim();
  Vector y(d * d);
  for (std::size_t m = 0; m < xs.count(); ++m) {
    auto x = xs.column(m);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) y[i * d + j] += x[i] * x[j];
  }
  if (counts) counts->outer += xs.count() * d * d;
  return y;
}

// z_i = <w_i, bp_full(xs)>.
inline Representation project_so(const FeatureSet& xs, const FullProjection& proj,
                                 OpCounts* counts = nullptr) {
  const std::size_t d = xs.dim();
  detail::require(proj.w.rows() == d * d, "project_so", "projection must have d^2 rows");
  const Vector y = bp_full(xs, counts);
  Representation z{Vector(proj.out_dim())};
  for (std::size_t r = 0; r < proj.w.rows(); ++r) {
    const double yr = y[r];
    auto wr = proj.w.row(r);
    for (std::size_t i = 0; i < z.dim(); ++i) z.values[i] += wr[i] * yr;
  }
  if (counts) counts->projection += proj.w.size();
  return z;
}

// z_i = sum_x <u_i, x><v_i, x>.
inline Representation rank1_pool(const FeatureSet& xs, const Rank1Params& p,
                                 OpCounts* counts = nullptr) {
  detail::require_locations(xs, "rank1_pool");
  detail::require(p.u.cols() == xs.dim() && p.v.cols() == xs.dim() && p.u.rows() == p.v.rows(),
                  "rank1_pool", "u, v must be D x d");
  const std::size_t big_d = p.out_dim();
  Representation z{Vector(big_d)};
  for (std::size_t m = 0; m < xs.count(); ++m) {
    auto x = xs.column(m);
    for (std::size_t i = 0; i < big_d; ++i) z.values[i] += dot(p.u.row(i), x) * dot(p.v.row(i), x);
  }
  if (counts) {
    counts->projector += xs.count() * 2 * big_d * xs.dim();
    counts->product += xs.count() * big_d;
  }
  return z;
}

// First-order sum pooling (the baseline representation).
inline Representation first_order_pool(const FeatureSet& xs) {
  detail::require_locations(xs, "first_order_pool");
  Representation z{Vector(xs.dim())};
  for (std::size_t m = 0; m < xs.count(); ++m) {
    auto x = xs.column(m);
    for (std::size_t k = 0; k < x.size(); ++k) z.values[k] += x[k];
  }
  return z;
}

// z_i = sum_x <w_i, h_p(x) (x) x (x) h_q(x) (x) x>, materialized.
// w has N^2 d^2 rows. Pass the same codebook twice for the shared case.
inline Representation codebook_bp_naive(const FeatureSet& xs, const Codebook& cb_p,
                                        const Codebook& cb_q, const Matrix& w,
                                        OpCounts* counts = nullptr) {
  detail::require_locations(xs, "codebook_bp_naive");
  const std::size_t d = xs.dim(), n = cb_p.n_words();
  const std::size_t nd = n * d;
  if (nd * nd > kNaiveCapacity) {
    throw CapacityError("codebook_bp_naive: N^2 d^2 = " + std::to_string(nd * nd) +
                        " exceeds the capacity guard of " + std::to_string(kNaiveCapacity));
  }
  detail::require(cb_q.n_words() == n, "codebook_bp_naive", "codebooks must have equal size");
  detail::require(w.rows() == nd * nd, "codebook_bp_naive", "projection must have N^2 d^2 rows");

  const bool shared = &cb_p == &cb_q;
  CosineAssigner assign_p(cb_p, counts);
  std::optional<CosineAssigner> assign_q;
  if (!shared) assign_q.emplace(cb_q, counts);

  Vector hp(n), hq(n), gp(nd), gq(nd), pooled(nd * nd);
  for (std::size_t m = 0; m < xs.count(); ++m) {
    auto x = xs.column(m);
    assign_p.assign(x, hp.span(), counts);
    if (shared) {
      hq = hp;
    } else {
      assign_q->assign(x, hq.span(), counts);
    }
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < d; ++k) {
        gp[j * d + k] = hp[j] * x[k];
        gq[j * d + k] = hq[j] * x[k];
      }
    for (std::size_t a = 0; a < nd; ++a)
      for (std::size_t b = 0; b < nd; ++b) pooled[a * nd + b] += gp[a] * gq[b];
  }
  if (counts) counts->outer += xs.count() * (2 * nd + nd * nd);

  Representation z{Vector(w.cols())};
  for (std::size_t r = 0; r < w.rows(); ++r) {
    auto wr = w.row(r);
    for (std::size_t i = 0; i < z.dim(); ++i) z.values[i] += wr[i] * pooled[r];
  }
  if (counts) counts->projection += w.size();
  return z;
}

inline Representation codebook_bp_naive(const FeatureSet& xs, const Codebook& cb, const Matrix& w,
                                        OpCounts* counts = nullptr) {
  return codebook_bp_naive(xs, cb, cb, w, counts);
}

// z_i(x) = (h_p(x)^T U_i^T x)(h_q(x)^T V_i^T x), summed over locations.
inline Representation jcf_pool(const FeatureSet& xs, const Codebook& cb_p, const Codebook& cb_q,
                               const JcfParams& p, OpCounts* counts = nullptr) {
  detail::require_locations(xs, "jcf_pool");
  const std::size_t d = xs.dim(), n = p.n_words(), big_d = p.out_dim();
  detail::require(p.dim() == d && p.v_set.rows() == d, "jcf_pool", "projector rows must equal d");
  detail::require(p.v_set.cols() == n && p.v_set.count() == big_d, "jcf_pool",
                  "u_set and v_set must have equal shapes");
  detail::require(cb_p.n_words() == n && cb_q.n_words() == n && cb_p.dim() == d && cb_q.dim() == d,
                  "jcf_pool", "codebook must be N x d");

  const bool shared = &cb_p == &cb_q;
  CosineAssigner assign_p(cb_p, counts);
  std::optional<CosineAssigner> assign_q;
  if (!shared) assign_q.emplace(cb_q, counts);

  Representation z{Vector(big_d)};
  Vector hp(n), hq(n), proj(n);
  for (std::size_t m = 0; m < xs.count(); ++m) {
    auto x = xs.column(m);
    assign_p.assign(x, hp.span(), counts);
    if (shared) {
      hq = hp;
    } else {
      assign_q->assign(x, hq.span(), counts);
    }
    for (std::size_t i = 0; i < big_d; ++i) {
      // proj = U_i^T x, then alpha = h^T proj.
      auto ui = p.u_set.slice(i);
      std::fill(proj.begin(), proj.end(), 0.0);
      for (std::size_t k = 0; k < d; ++k)
        for (std::size_t j = 0; j < n; ++j) proj[j] += ui[k * n + j] * x[k];
      const double alpha = dot(hp.span(), proj.span());

      auto vi = p.v_set.slice(i);
      std::fill(proj.begin(), proj.end(), 0.0);
      for (std::size_t k = 0; k < d; ++k)
        for (std::size_t j = 0; j < n; ++j) proj[j] += vi[k * n + j] * x[k];
      const double beta = dot(hq.span(), proj.span());

      z.values[i] += alpha * beta;
    }
  }
  if (counts) {
    counts->projector += xs.count() * 2 * big_d * d * n;
    counts->contraction += xs.count() * 2 * big_d * n;
    counts->product += xs.count() * big_d;
  }
  return z;
}

inline Representation jcf_pool(const FeatureSet& xs, const Codebook& cb, const JcfParams& p,
                               OpCounts* counts = nullptr) {
  return jcf_pool(xs, cb, cb, p, counts);
}

// z_i(x) = (h_p(x)^T A U~_i^T x)(h_q(x)^T B V~_i^T x), summed over locations.
// Per location only s = A^T h and t = B^T h touch N; every per-output loop is R-sized.
inline Representation jcf_shared_pool(const FeatureSet& xs, const Codebook& cb_p,
                                      const Codebook& cb_q, const JcfSharedParams& p,
                                      OpCounts* counts = nullptr) {
  detail::require_locations(xs, "jcf_shared_pool");
  const std::size_t d = xs.dim(), n = p.n_words(), r = p.rank(), big_d = p.out_dim();
  detail::require(r >= 1, "jcf_shared_pool", "R must be >= 1");
  detail::require(p.dim() == d && p.v_shared.rows() == d, "jcf_shared_pool",
                  "projector rows must equal d");
  detail::require(p.v_shared.cols() == r && p.v_shared.count() == big_d, "jcf_shared_pool",
                  "u_shared and v_shared must have equal shapes");
  detail::require(p.a.cols() == r && p.b.rows() == n && p.b.cols() == r, "jcf_shared_pool",
                  "A, B must be N x R");
  detail::require(cb_p.n_words() == n && cb_q.n_words() == n && cb_p.dim() == d && cb_q.dim() == d,
                  "jcf_shared_pool", "codebook must be N x d");

  const bool shared = &cb_p == &cb_q;
  CosineAssigner assign_p(cb_p, counts);
  std::optional<CosineAssigner> assign_q;
  if (!shared) assign_q.emplace(cb_q, counts);

  Representation z{Vector(big_d)};
  Vector hp(n), hq(n), s(r), t(r), proj(r);
  for (std::size_t m = 0; m < xs.count(); ++m) {
    auto x = xs.column(m);
    assign_p.assign(x, hp.span(), counts);
    if (shared) {
      hq = hp;
    } else {
      assign_q->assign(x, hq.span(), counts);
    }
    std::fill(s.begin(), s.end(), 0.0);
    std::fill(t.begin(), t.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      auto aj = p.a.row(j);
      auto bj = p.b.row(j);
      for (std::size_t c = 0; c < r; ++c) {
        s[c] += aj[c] * hp[j];
        t[c] += bj[c] * hq[j];
      }
    }
    for (std::size_t i = 0; i < big_d; ++i) {
      auto ui = p.u_shared.slice(i);
      std::fill(proj.begin(), proj.end(), 0.0);
      for (std::size_t k = 0; k < d; ++k)
        for (std::size_t c = 0; c < r; ++c) proj[c] += ui[k * r + c] * x[k];
      const double alpha = dot(s.span(), proj.span());

      auto vi = p.v_shared.slice(i);
      std::fill(proj.begin(), proj.end(), 0.0);
      for (std::size_t k = 0; k < d; ++k)
        for (std::size_t c = 0; c < r; ++c) proj[c] += vi[k * r + c] * x[k];
      const double beta = dot(t.span(), proj.span());

      z.values[i] += alpha * beta;
    }
  }
  if (counts) {
    counts->recombination += xs.count() * 2 * n * r;
    counts->projector += xs.count() * 2 * big_d * d * r;
    counts->contraction += xs.count() * 2 * big_d * r;
    counts->product += xs.count() * big_d;
  }
  return z;
}

inline Representation jcf_shared_pool(const FeatureSet& xs, const Codebook& cb,
                                      const JcfSharedParams& p, OpCounts* counts = nullptr) {
  return jcf_shared_pool(xs, cb, cb, p, counts);
}

// Maps every column through reduction^T (d_in x d) and l2-normalizes it.
inline FeatureSet reduce_features(const FeatureSet& raw, const Matrix& reduction,
                                  double eps = kDefaultEps, OpCounts* counts = nullptr) {
  detail::require(raw.dim() == reduction.rows(), "reduce_features",
                  "reduction must have d_in rows");
  const std::size_t d_in = reduction.rows(), d = reduction.cols();
  FeatureSet out(d, raw.count());
  for (std::size_t m = 0; m < raw.count(); ++m) {
    auto x = raw.column(m);
    auto y = out.column(m);
    for (std::size_t k = 0; k < d_in; ++k) {
      const double xk = x[k];
      auto rk = reduction.row(k);
      for (std::size_t c = 0; c < d; ++c) y[c] += rk[c] * xk;
    }
    const double n = std::max(norm2(y), eps);
    for (double& v : y) v /= n;
  }
  if (counts) counts->reduction += raw.count() * (d_in * d + d);
  return out;
}

}  // namespace jcf
