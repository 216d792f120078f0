#pragma once

// Hand-derived reverse mode for the pooling pipeline.
//
// Every backward takes the upstream gradient g = dL/dz_out and returns the
// gradient of <g, z_out> with respect to all parameters and the features.
// Chain per location for JCF-N-R:
//   cos_j = <c_j, x> / (|c_j| |x|),  h = softmax(cos / tau)
//   s = A^T h,  t = B^T h,  P_i = U~_i^T x,  Q_i = V~_i^T x
//   z_i(x) = (s . P_i)(t . Q_i)
// JCF-N is the same chain with s = t = h and no recombination.

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "jcf/model.hpp"

namespace jcf {

struct GradientBundle {
  Matrix d_reduction;
  Matrix d_codebook;
  Matrix d_codebook_q;
  Matrix d_u;
  Matrix d_v;
  Tensor3 d_u_set;
  Tensor3 d_v_set;
  Tensor3 d_u_shared;
  Tensor3 d_v_shared;
  Matrix d_a;
  Matrix d_b;
  FeatureSet d_features;      // w.r.t. the pooled (reduced) features, d x M
  FeatureSet d_raw_features;  // w.r.t. the raw input, d_in x M (model_backward only)

  // Zero gradients shaped like the parameters of `p`.
  static GradientBundle zeros_like(const ModelParams& p) {
    GradientBundle g;
    g.d_reduction = Matrix(p.reduction.rows(), p.reduction.cols());
    auto like = [](const auto& m) { return Matrix(m.rows(), m.cols()); };
    auto like3 = [](const Tensor3& t) { return Tensor3(t.count(), t.rows(), t.cols()); };
    g.d_codebook = like(p.codebook.words());
    g.d_codebook_q = like(p.codebook_q.words());
    g.d_u = like(p.rank1.u);
    g.d_v = like(p.rank1.v);
    g.d_u_set = like3(p.jcf.u_set);
    g.d_v_set = like3(p.jcf.v_set);
    g.d_u_shared = like3(p.shared.u_shared);
    g.d_v_shared = like3(p.shared.v_shared);
    g.d_a = like(p.shared.a);
    g.d_b = like(p.shared.b);
    return g;
  }

  // Parameter gradients by the same names ModelParams uses.
  template <typename F>
  void for_each_tensor(F&& f) {
    visit_impl<TensorRef>(*this, f);
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    visit_impl<ConstTensorRef>(*this, f);
  }

  // Adds every parameter gradient of `o` into the same-named tensor here.
  // Features are excluded. `o` may carry a subset of this bundle's tensors.
  GradientBundle& operator+=(const GradientBundle& o) {
    std::vector<std::pair<std::string_view, std::span<double>>> dst;
    for_each_tensor([&](const TensorRef& t) { dst.emplace_back(t.name, t.data); });
    o.for_each_tensor([&](const ConstTensorRef& t) {
      auto it = std::find_if(dst.begin(), dst.end(), [&](const auto& e) { return e.first == t.name; });
      if (it == dst.end() || it->second.size() != t.data.size())
        throw ShapeError("GradientBundle: cannot accumulate '" + std::string(t.name) + "'");
      for (std::size_t k = 0; k < t.data.size(); ++k) it->second[k] += t.data[k];
    });
    return *this;
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
    mat("reduction", self.d_reduction);
    mat("codebook", self.d_codebook);
    mat("codebook_q", self.d_codebook_q);
    mat("u", self.d_u);
    mat("v", self.d_v);
    ten("u_set", self.d_u_set);
    ten("v_set", self.d_v_set);
    ten("u_shared", self.d_u_shared);
    ten("v_shared", self.d_v_shared);
    mat("a", self.d_a);
    mat("b", self.d_b);
  }
};

struct BackwardOptions {
  bool normalize_output = true;
  double eps = kDefaultEps;
};

namespace detail {

// Gradient of y = v / max(|v|, eps) pulled back to v.
inline void normalize_backward(std::span<const double> v, std::span<const double> g_out,
                               std::span<double> g_in, double eps) {
  const double n = norm2(v);
  if (n > eps) {
    double proj = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) proj += v[k] * g_out[k];
    proj /= n * n;
    for (std::size_t k = 0; k < v.size(); ++k) g_in[k] = (g_out[k] - v[k] * proj) / n;
  } else {
    for (std::size_t k = 0; k < v.size(); ++k) g_in[k] = g_out[k] / eps;
  }
}

// Converts dL/dz_out to dL/dz for the pooled sum z.
inline Vector pooled_upstream(const Representation& z, const Vector& upstream,
                              const BackwardOptions& opts) {
  if (upstream.dim() != z.dim()) throw ShapeError("backward: upstream must have dimension D");
  if (!opts.normalize_output) return upstream;
  Vector g(z.dim());
  normalize_backward(z.values.span(), upstream.span(), g.span(), opts.eps);
  return g;
}

// Pulls g_h = dL/dh back through h = softmax(cos(x, C) / tau).
// Accumulates into d_codebook and g_x.
inline void assignment_backward(std::span<const double> x, const Codebook& cb,
                                std::span<const double> h, std::span<const double> g_h,
                                Matrix& d_codebook, std::span<double> g_x, double eps) {
  const double tau = cb.temperature();
  const std::size_t n = cb.n_words(), d = x.size();
  double hg = 0.0;
  for (std::size_t j = 0; j < n; ++j) hg += h[j] * g_h[j];

  const double x_norm = norm2(x);
  const double nx = std::max(x_norm, eps);
  const Matrix& words = cb.words();
  for (std::size_t j = 0; j < n; ++j) {
    const double g_cos = h[j] * (g_h[j] - hg) / tau;
    if (g_cos == 0.0) continue;
    auto c = words.row(j);
    const double c_norm = norm2(c);
    const double nc = std::max(c_norm, eps);
    const double cosv = dot(c, x) / (nc * nx);
    auto dc = d_codebook.row(j);
    for (std::size_t k = 0; k < d; ++k) {
      double dcos_dc = x[k] / (nc * nx);
      if (c_norm > eps) dcos_dc -= cosv * c[k] / (nc * nc);
      double dcos_dx = c[k] / (nc * nx);
      if (x_norm > eps) dcos_dx -= cosv * x[k] / (nx * nx);
      dc[k] += g_cos * dcos_dc;
      g_x[k] += g_cos * dcos_dx;
    }
  }
}

inline void require_soft(const Codebook& cb, const char* who) {
  if (!cb.is_soft())
    throw UnsupportedModeError(std::string(who) + ": hard assignment has no gradient");
}

}  // namespace detail

// Gradients of <upstream, z_out> for JCF-N-R pooling over reduced features.
inline GradientBundle jcf_shared_backward(const FeatureSet& xs, const Codebook& cb_p,
                                          const Codebook& cb_q, const JcfSharedParams& p,
                                          const Vector& upstream, const BackwardOptions& opts = {}) {
  detail::require_soft(cb_p, "jcf_shared_backward");
  detail::require_soft(cb_q, "jcf_shared_backward");
  const Representation z = jcf_shared_pool(xs, cb_p, cb_q, p);
  const Vector g_z = detail::pooled_upstream(z, upstream, opts);

  const std::size_t d = xs.dim(), n = p.n_words(), r = p.rank(), big_d = p.out_dim();
  const bool shared = &cb_p == &cb_q;
  GradientBundle g;
  g.d_u_shared = Tensor3(big_d, d, r);
  g.d_v_shared = Tensor3(big_d, d, r);
  g.d_a = Matrix(n, r);
  g.d_b = Matrix(n, r);
  g.d_codebook = Matrix(n, d);
  if (!shared) g.d_codebook_q = Matrix(n, d);
  g.d_features = FeatureSet(d, xs.count());

  CosineAssigner assign_p(cb_p, nullptr, opts.eps), assign_q(cb_q, nullptr, opts.eps);
  Vector hp(n), hq(n), s(r), t(r), pu(r), qv(r), g_s(r), g_t(r), g_hp(n), g_hq(n);
  for (std::size_t m = 0; m < xs.count(); ++m) {
    auto x = xs.column(m);
    auto g_x = g.d_features.column(m);
    assign_p.assign(x, hp.span());
    if (shared) {
      hq = hp;
    } else {
      assign_q.assign(x, hq.span());
    }
    std::fill(s.begin(), s.end(), 0.0);
    std::fill(t.begin(), t.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t c = 0; c < r; ++c) {
        s[c] += p.a(j, c) * hp[j];
        t[c] += p.b(j, c) * hq[j];
      }

    std::fill(g_s.begin(), g_s.end(), 0.0);
    std::fill(g_t.begin(), g_t.end(), 0.0);
    for (std::size_t i = 0; i < big_d; ++i) {
      auto ui = p.u_shared.slice(i);
      auto vi = p.v_shared.slice(i);
      std::fill(pu.begin(), pu.end(), 0.0);
      std::fill(qv.begin(), qv.end(), 0.0);
      for (std::size_t k = 0; k < d; ++k)
        for (std::size_t c = 0; c < r; ++c) {
          pu[c] += ui[k * r + c] * x[k];
          qv[c] += vi[k * r + c] * x[k];
        }
      const double alpha = dot(s.span(), pu.span());
      const double beta = dot(t.span(), qv.span());
      const double g_alpha = g_z[i] * beta;
      const double g_beta = g_z[i] * alpha;

      auto dui = g.d_u_shared.slice(i);
      auto dvi = g.d_v_shared.slice(i);
      for (std::size_t k = 0; k < d; ++k) {
        double gx = 0.0;
        for (std::size_t c = 0; c < r; ++c) {
          const double us = g_alpha * s[c];
          const double vt = g_beta * t[c];
          dui[k * r + c] += x[k] * us;
          dvi[k * r + c] += x[k] * vt;
          gx += ui[k * r + c] * us + vi[k * r + c] * vt;
        }
        g_x[k] += gx;
      }
      for (std::size_t c = 0; c < r; ++c) {
        g_s[c] += g_alpha * pu[c];
        g_t[c] += g_beta * qv[c];
      }
    }

    for (std::size_t j = 0; j < n; ++j) {
      double ghp = 0.0, ghq = 0.0;
      for (std::size_t c = 0; c < r; ++c) {
        g.d_a(j, c) += hp[j] * g_s[c];
        g.d_b(j, c) += hq[j] * g_t[c];
        ghp += p.a(j, c) * g_s[c];
        ghq += p.b(j, c) * g_t[c];
      }
      g_hp[j] = ghp;
      g_hq[j] = ghq;
    }
    if (shared) {
      for (std::size_t j = 0; j < n; ++j) g_hp[j] += g_hq[j];
      detail::assignment_backward(x, cb_p, hp.span(), g_hp.span(), g.d_codebook, g_x, opts.eps);
    } else {
      detail::assignment_backward(x, cb_p, hp.span(), g_hp.span(), g.d_codebook, g_x, opts.eps);
      detail::assignment_backward(x, cb_q, hq.span(), g_hq.span(), g.d_codebook_q, g_x, opts.eps);
    }
  }
  return g;
}

inline GradientBundle jcf_shared_backward(const FeatureSet& xs, const Codebook& cb,
                                          const JcfSharedParams& p, const Vector& upstream,
                                          const BackwardOptions& opts = {}) {
  return jcf_shared_backward(xs, cb, cb, p, upstream, opts);
}

// Gradients of <upstream, z_out> for JCF-N pooling over reduced features.
inline GradientBundle jcf_backward(const FeatureSet& xs, const Codebook& cb_p, const Codebook& cb_q,
                                   const JcfParams& p, const Vector& upstream,
                                   const BackwardOptions& opts = {}) {
  detail::require_soft(cb_p, "jcf_backward");
  detail::require_soft(cb_q, "jcf_backward");
  const Representation z = jcf_pool(xs, cb_p, cb_q, p);
  const Vector g_z = detail::pooled_upstream(z, upstream, opts);

  const std::size_t d = xs.dim(), n = p.n_words(), big_d = p.out_dim();
  const bool shared = &cb_p == &cb_q;
  GradientBundle g;
  g.d_u_set = Tensor3(big_d, d, n);
  g.d_v_set = Tensor3(big_d, d, n);
  g.d_codebook = Matrix(n, d);
  if (!shared) g.d_codebook_q = Matrix(n, d);
  g.d_features = FeatureSet(d, xs.count());

  CosineAssigner assign_p(cb_p, nullptr, opts.eps), assign_q(cb_q, nullptr, opts.eps);
  Vector hp(n), hq(n), pu(n), qv(n), g_hp(n), g_hq(n);
  for (std::size_t m = 0; m < xs.count(); ++m) {
    auto x = xs.column(m);
    auto g_x = g.d_features.column(m);
    assign_p.assign(x, hp.span());
    if (shared) {
      hq = hp;
    } else {
      assign_q.assign(x, hq.span());
    }
    std::fill(g_hp.begin(), g_hp.end(), 0.0);
    std::fill(g_hq.begin(), g_hq.end(), 0.0);
    for (std::size_t i = 0; i < big_d; ++i) {
      auto ui = p.u_set.slice(i);
      auto vi = p.v_set.slice(i);
      std::fill(pu.begin(), pu.end(), 0.0);
      std::fill(qv.begin(), qv.end(), 0.0);
      for (std::size_t k = 0; k < d; ++k)
        for (std::size_t j = 0; j < n; ++j) {
          pu[j] += ui[k * n + j] * x[k];
          qv[j] += vi[k * n + j] * x[k];
        }
      const double alpha = dot(hp.span(), pu.span());
      const double beta = dot(hq.span(), qv.span());
      const double g_alpha = g_z[i] * beta;
      const double g_beta = g_z[i] * alpha;

      auto dui = g.d_u_set.slice(i);
      auto dvi = g.d_v_set.slice(i);
      for (std::size_t k = 0; k < d; ++k) {
        double gx = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const double uh = g_alpha * hp[j];
          const double vh = g_beta * hq[j];
          dui[k * n + j] += x[k] * uh;
          dvi[k * n + j] += x[k] * vh;
          gx += ui[k * n + j] * uh + vi[k * n + j] * vh;
        }
        g_x[k] += gx;
      }
      for (std::size_t j = 0; j < n; ++j) {
        g_hp[j] += g_alpha * pu[j];
        g_hq[j] += g_beta * qv[j];
      }
    }
    if (shared) {
      for (std::size_t j = 0; j < n; ++j) g_hp[j] += g_hq[j];
      detail::assignment_backward(x, cb_p, hp.span(), g_hp.span(), g.d_codebook, g_x, opts.eps);
    } else {
      detail::assignment_backward(x, cb_p, hp.span(), g_hp.span(), g.d_codebook, g_x, opts.eps);
      detail::assignment_backward(x, cb_q, hq.span(), g_hq.span(), g.d_codebook_q, g_x, opts.eps);
    }
  }
  return g;
}

inline GradientBundle jcf_backward(const FeatureSet& xs, const Codebook& cb, const JcfParams& p,
                                   const Vector& upstream, const BackwardOptions& opts = {}) {
  return jcf_backward(xs, cb, cb, p, upstream, opts);
}

inline GradientBundle rank1_backward(const FeatureSet& xs, const Rank1Params& p,
                                     const Vector& upstream, const BackwardOptions& opts = {}) {
  const Representation z = rank1_pool(xs, p);
  const Vector g_z = detail::pooled_upstream(z, upstream, opts);
  const std::size_t d = xs.dim(), big_d = p.out_dim();
  GradientBundle g;
  g.d_u = Matrix(big_d, d);
  g.d_v = Matrix(big_d, d);
  g.d_features = FeatureSet(d, xs.count());
  for (std::size_t m = 0; m < xs.count(); ++m) {
    auto x = xs.column(m);
    auto g_x = g.d_features.column(m);
    for (std::size_t i = 0; i < big_d; ++i) {
      auto ui = p.u.row(i);
      auto vi = p.v.row(i);
      const double alpha = dot(ui, x), beta = dot(vi, x);
      const double ga = g_z[i] * beta, gb = g_z[i] * alpha;
      auto dui = g.d_u.row(i);
      auto dvi = g.d_v.row(i);
      for (std::size_t k = 0; k < d; ++k) {
        dui[k] += ga * x[k];
        dvi[k] += gb * x[k];
        g_x[k] += ga * ui[k] + gb * vi[k];
      }
    }
  }
  return g;
}

inline GradientBundle first_order_backward(const FeatureSet& xs, const Vector& upstream,
                                           const BackwardOptions& opts = {}) {
  const Representation z = first_order_pool(xs);
  const Vector g_z = detail::pooled_upstream(z, upstream, opts);
  GradientBundle g;
  g.d_features = FeatureSet(xs.dim(), xs.count());
  for (std::size_t m = 0; m < xs.count(); ++m)
    std::copy(g_z.begin(), g_z.end(), g.d_features.column(m).begin());
  return g;
}

// Pooling-stage backward for whichever method `p` uses.
inline GradientBundle pool_backward(const ModelParams& p, const FeatureSet& xs,
                                    const Vector& upstream) {
  const BackwardOptions opts{p.config.normalize_output, p.config.eps};
  switch (p.config.method) {
    case Method::Baseline:
      return first_order_backward(xs, upstream, opts);
    case Method::Factorized:
      return rank1_backward(xs, p.rank1, upstream, opts);
    case Method::Jcf:
      return jcf_backward(xs, p.codebook_p(), p.codebook_second(), p.jcf, upstream, opts);
    case Method::JcfShared:
      return jcf_shared_backward(xs, p.codebook_p(), p.codebook_second(), p.shared, upstream, opts);
    default:
      throw InputError("pool_backward: method is not trainable");
  }
}

// Full pipeline backward: pooling stage, then through the per-column
// l2 normalization and the reduction layer.
inline GradientBundle model_backward(const ModelParams& p, const FeatureSet& raw,
                                     const Vector& upstream) {
  const FeatureSet xs = reduce_features(raw, p.reduction, p.config.eps);
  GradientBundle pooled = pool_backward(p, xs, upstream);

  GradientBundle g = GradientBundle::zeros_like(p);
  g += pooled;
  g.d_features = std::move(pooled.d_features);

  const std::size_t d_in = p.reduction.rows(), d = p.reduction.cols();
  g.d_raw_features = FeatureSet(d_in, raw.count());
  Vector y(d), g_y(d);
  for (std::size_t m = 0; m < raw.count(); ++m) {
    auto r = raw.column(m);
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t k = 0; k < d_in; ++k)
      for (std::size_t c = 0; c < d; ++c) y[c] += p.reduction(k, c) * r[k];
    detail::normalize_backward(y.span(), g.d_features.column(m), g_y.span(), p.config.eps);
    auto g_r = g.d_raw_features.column(m);
    for (std::size_t k = 0; k < d_in; ++k) {
      auto wk = p.reduction.row(k);
      auto dwk = g.d_reduction.row(k);
      double acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        dwk[c] += r[k] * g_y[c];
        acc += wk[c] * g_y[c];
      }
      g_r[k] = acc;
    }
  }
  return g;
}

using FreezeSet = std::set<std::string, std::less<>>;

// p <- p - lr * g for every tensor not named in `frozen`; codebook rows are
// re-normalized afterwards. Rejects non-finite gradients before touching p.
inline void sgd_step(ModelParams& p, const GradientBundle& g, double lr,
                     const FreezeSet& frozen = {}) {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw InputError("sgd_step: learning rate must be >= 0");
  std::vector<std::pair<std::string_view, std::span<const double>>> grads;
  g.for_each_tensor([&](const ConstTensorRef& t) {
    if (!all_finite(t.data))
      throw NumericError(std::string(t.name), "sgd_step: non-finite gradient in '" +
                                                  std::string(t.name) + "'");
    grads.emplace_back(t.name, t.data);
  });
  auto gradient_for = [&](const TensorRef& t) -> const std::span<const double>* {
    if (frozen.count(t.name)) return nullptr;
    auto it = std::find_if(grads.begin(), grads.end(), [&](const auto& e) { return e.first == t.name; });
    if (it == grads.end()) return nullptr;
    if (it->second.size() != t.data.size())
      throw ShapeError("sgd_step: gradient shape mismatch for '" + std::string(t.name) + "'");
    return &it->second;
  };
  // Validate every update before writing any of them.
  p.for_each_tensor([&](const TensorRef& t) {
    const auto* g = gradient_for(t);
    if (!g) return;
    for (std::size_t k = 0; k < t.data.size(); ++k)
      if (!std::isfinite(t.data[k] - lr * (*g)[k]))
        throw NumericError(std::string(t.name), "sgd_step: update overflows '" + std::string(t.name) + "'");
  });
  if (lr == 0.0) return;
  bool codebook_moved = false, codebook_q_moved = false;
  p.for_each_tensor([&](const TensorRef& t) {
    const auto* g = gradient_for(t);
    if (!g) return;
    for (std::size_t k = 0; k < t.data.size(); ++k) t.data[k] -= lr * (*g)[k];
    codebook_moved |= t.name == "codebook";
    codebook_q_moved |= t.name == "codebook_q";
  });
  if (codebook_moved) p.codebook.renormalize();
  if (codebook_q_moved) p.codebook_q.renormalize();
}

// Finite-difference verification of model_backward.

struct FdCheckConfig {
  // tau = 0.25 keeps the softmax away from saturation, where entries of
  // order 1e-7 fall below the resolution of a 1e-5 central difference.
  ModelConfig model{Method::JcfShared, /*d_in=*/5, /*d=*/4, /*out_dim=*/2, /*n_words=*/3,
                    /*rank=*/2, /*temperature=*/0.25};
  std::size_t locations = 3;
  double step = 1e-5;
  double tolerance = 1e-5;
  // Empty = every parameter tensor plus "features" (the raw input).
  std::vector<std::string> tensors;
};

struct TensorCheck {
  std::string name;
  std::size_t entries = 0;
  double max_rel_error = 0.0;
};

struct FdCheckReport {
  std::vector<TensorCheck> tensors;
  double max_rel_error = 0.0;
  bool pass = false;
};

inline double fd_relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

inline FdCheckReport finite_diff_check(const FdCheckConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  ModelParams params = random_model(cfg.model, rng);
  FeatureSet raw = FeatureSet::from_locations(random_normal(cfg.locations, cfg.model.d_in, rng));
  const Vector upstream = random_normal(cfg.model.out_dim, rng);

  const GradientBundle analytic = model_backward(params, raw, upstream);
  auto objective = [&]() { return dot(upstream.span(), embed(params, raw).values.span()); };
  auto wanted = [&](std::string_view name) {
    return cfg.tensors.empty() ||
           std::find(cfg.tensors.begin(), cfg.tensors.end(), name) != cfg.tensors.end();
  };

  FdCheckReport report;
  auto check = [&](std::string_view name, std::span<double> values, std::span<const double> grad) {
    TensorCheck tc{std::string(name), values.size(), 0.0};
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double saved = values[k];
      values[k] = saved + cfg.step;
      const double plus = objective();
      values[k] = saved - cfg.step;
      const double minus = objective();
      values[k] = saved;
      const double numeric = (plus - minus) / (2.0 * cfg.step);
      tc.max_rel_error = std::max(tc.max_rel_error, fd_relative_error(grad[k], numeric));
    }
    report.max_rel_error = std::max(report.max_rel_error, tc.max_rel_error);
    report.tensors.push_back(std::move(tc));
  };

  std::vector<std::pair<std::string_view, std::span<const double>>> grads;
  analytic.for_each_tensor([&](const ConstTensorRef& t) { grads.emplace_back(t.name, t.data); });
  params.for_each_tensor([&](const TensorRef& t) {
    if (!wanted(t.name)) return;
    auto it = std::find_if(grads.begin(), grads.end(), [&](const auto& e) { return e.first == t.name; });
    check(t.name, t.data, it->second);
  });
  if (wanted("features")) check("features", raw.locations().span(), analytic.d_raw_features.locations().span());

  report.pass = report.max_rel_error < cfg.tolerance;
  return report;
}

}  // namespace jcf
