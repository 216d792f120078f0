#pragma once

// Codebook and the assignment function h(x) in R^N: softmax over
// temperature-scaled cosine similarity (soft) or one-hot argmax (hard).

#include <cstdint>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "jcf/features.hpp"
#include "jcf/linalg.hpp"
#include "jcf/op_counts.hpp"
#include "jcf/rng.hpp"

namespace jcf {

struct SoftMode {
  double temperature = 0.1;
  bool operator==(const SoftMode&) const = default;
};
struct HardMode {
  bool operator==(const HardMode&) const = default;
};
using AssignMode = std::variant<SoftMode, HardMode>;

struct Assignment {
  Vector weights;
};

inline void normalize_rows(Matrix& m, double eps = kDefaultEps) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    const double n = std::max(norm2(row), eps);
    for (double& v : row) v /= n;
  }
}

class Codebook {
 public:
  Codebook() = default;

  // Rows of `words` are the codewords; they are normalized on construction.
  Codebook(Matrix words, AssignMode mode = SoftMode{}) : words_(std::move(words)), mode_(mode) {
    if (words_.rows() == 0 || words_.cols() == 0) throw InputError("Codebook: need N >= 1 and d >= 1");
    if (const auto* s = std::get_if<SoftMode>(&mode_); s && !(s->temperature > 0.0))
      throw InputError("Codebook: temperature must be positive");
    normalize_rows(words_);
  }

  std::size_t n_words() const noexcept { return words_.rows(); }
  std::size_t dim() const noexcept { return words_.cols(); }
  bool empty() const noexcept { return words_.empty(); }

  const Matrix& words() const noexcept { return words_; }
  // Mutable access for training updates; call renormalize() afterwards.
  Matrix& words() noexcept { return words_; }
  void renormalize() { normalize_rows(words_); }

  const AssignMode& mode() const noexcept { return mode_; }
  bool is_soft() const noexcept { return std::holds_alternative<SoftMode>(mode_); }
  double temperature() const {
    const auto* s = std::get_if<SoftMode>(&mode_);
    if (!s) throw UnsupportedModeError("Codebook: hard mode has no temperature");
    return s->temperature;
  }

  bool operator==(const Codebook&) const = default;

 private:
  Matrix words_;
  AssignMode mode_ = SoftMode{};
};

// Evaluates h(x) for many features against one codebook, computing the
// codeword norms once per instance.
class CosineAssigner {
 public:
  explicit CosineAssigner(const Codebook& cb, OpCounts* counts = nullptr, double eps = kDefaultEps)
      : cb_(cb), inv_norms_(cb.n_words()), eps_(eps) {
    const Matrix& w = cb.words();
    for (std::size_t j = 0; j < w.rows(); ++j) inv_norms_[j] = 1.0 / std::max(norm2(w.row(j)), eps);
    if (counts) counts->assignment += w.rows() * w.cols();
  }

  std::size_t n_words() const noexcept { return cb_.n_words(); }

  // out[j] = cos(x, c_j) with eps-guarded norms.
  void cosines(std::span<const double> x, std::span<double> out, OpCounts* counts = nullptr) const {
    if (x.size() != cb_.dim()) throw ShapeError("assignment: feature dim does not match codebook");
    const double inv_x = 1.0 / std::max(norm2(x), eps_);
    const Matrix& w = cb_.words();
    for (std::size_t j = 0; j < w.rows(); ++j) out[j] = dot(w.row(j), x) * inv_x * inv_norms_[j];
    if (counts) counts->assignment += x.size() * (w.rows() + 1);
  }

  void assign(std::span<const double> x, std::span<double> h, OpCounts* counts = nullptr) const {
    cosines(x, h, counts);
    if (const auto* s = std::get_if<SoftMode>(&cb_.mode())) {
      for (double& v : h) v /= s->temperature;
      softmax_into(h, h);
    } else {
      std::size_t best = 0;
      for (std::size_t j = 1; j < h.size(); ++j)
        if (h[j] > h[best]) best = j;
      std::fill(h.begin(), h.end(), 0.0);
      h[best] = 1.0;
    }
  }

 private:
  const Codebook& cb_;
  std::vector<double> inv_norms_;
  double eps_;
};

inline Assignment soft_assign(std::span<const double> x, const Codebook& cb) {
  if (!cb.is_soft()) throw UnsupportedModeError("soft_assign: codebook is in hard mode");
  if (x.size() != cb.dim()) throw ShapeError("soft_assign: feature dim does not match codebook");
  Assignment a{Vector(cb.n_words())};
  CosineAssigner(cb).assign(x, a.weights.span());
  return a;
}

// One-hot at the highest cosine similarity; ties go to the lowest index.
// Ignores the codebook's own mode.
inline Assignment hard_assign(std::span<const double> x, const Codebook& cb) {
  if (x.size() != cb.dim()) throw ShapeError("hard_assign: feature dim does not match codebook");
  Codebook hard(cb.words(), HardMode{});
  Assignment a{Vector(cb.n_words())};
  CosineAssigner(hard).assign(x, a.weights.span());
  return a;
}

inline Assignment soft_assign(const Vector& x, const Codebook& cb) { return soft_assign(x.span(), cb); }
inline Assignment hard_assign(const Vector& x, const Codebook& cb) { return hard_assign(x.span(), cb); }

struct CodebookInitOptions {
  std::size_t lloyd_iterations = 10;
  AssignMode mode = SoftMode{};
};

// k-means++ seeding followed by spherical Lloyd iterations on the
// l2-normalized feature columns. Deterministic for a given seed.
inline Codebook init_codebook(std::span<const FeatureSet> features, std::size_t n_words,
                              std::uint64_t seed, const CodebookInitOptions& opts = {}) {
  if (n_words == 0) throw InputError("init_codebook: n_words must be >= 1");
  std::size_t dim = 0, total = 0;
  for (const auto& fs : features) {
    if (fs.count() == 0) continue;
    if (dim == 0) dim = fs.dim();
    if (fs.dim() != dim) throw ShapeError("init_codebook: feature sets disagree on dimension");
    total += fs.count();
  }
  if (total < n_words) {
    throw InputError("init_codebook: " + std::to_string(total) + " feature columns for " +
                     std::to_string(n_words) + " codewords");
  }

  Matrix points(total, dim);
  std::size_t at = 0;
  for (const auto& fs : features) {
    for (std::size_t m = 0; m < fs.count(); ++m, ++at) {
      Vector unit = l2_normalize(fs.column(m));
      std::copy(unit.begin(), unit.end(), points.row(at).begin());
    }
  }

  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto sq_dist = [&](std::size_t p, std::span<const double> c) {
    double s = 0.0;
    auto x = points.row(p);
    for (std::size_t k = 0; k < dim; ++k) s += (x[k] - c[k]) * (x[k] - c[k]);
    return s;
  };

  Matrix centers(n_words, dim);
  std::vector<double> nearest(total);
  std::size_t first = std::min<std::size_t>(static_cast<std::size_t>(unif(rng) * total), total - 1);
  std::copy_n(points.row(first).begin(), dim, centers.row(0).begin());
  for (std::size_t p = 0; p < total; ++p) nearest[p] = sq_dist(p, centers.row(0));

  for (std::size_t c = 1; c < n_words; ++c) {
    double mass = 0.0;
    for (double v : nearest) mass += v;
    std::size_t pick = total - 1;
    if (mass > 0.0) {
      const double target = unif(rng) * mass;
      double run = 0.0;
      for (std::size_t p = 0; p < total; ++p) {
        run += nearest[p];
        if (run > target && nearest[p] > 0.0) {
          pick = p;
          break;
        }
      }
    } else {
      pick = std::min<std::size_t>(static_cast<std::size_t>(unif(rng) * total), total - 1);
    }
    std::copy_n(points.row(pick).begin(), dim, centers.row(c).begin());
    for (std::size_t p = 0; p < total; ++p) nearest[p] = std::min(nearest[p], sq_dist(p, centers.row(c)));
  }

  std::vector<std::size_t> owner(total, n_words);
  for (std::size_t it = 0; it < opts.lloyd_iterations; ++it) {
    bool changed = false;
    for (std::size_t p = 0; p < total; ++p) {
      std::size_t best = 0;
      double best_sim = dot(points.row(p), centers.row(0));
      for (std::size_t c = 1; c < n_words; ++c) {
        const double sim = dot(points.row(p), centers.row(c));
        if (sim > best_sim) {
          best_sim = sim;
          best = c;
        }
      }
      if (owner[p] != best) changed = true;
      owner[p] = best;
    }
    if (!changed) break;

    Matrix sums(n_words, dim);
    std::vector<std::size_t> members(n_words, 0);
    for (std::size_t p = 0; p < total; ++p) {
      auto s = sums.row(owner[p]);
      auto x = points.row(p);
      for (std::size_t k = 0; k < dim; ++k) s[k] += x[k];
      ++members[owner[p]];
    }
    for (std::size_t c = 0; c < n_words; ++c) {
      // Empty clusters keep their previous center.
      if (members[c] == 0 || norm2(sums.row(c)) == 0.0) continue;
      std::copy_n(sums.row(c).begin(), dim, centers.row(c).begin());
    }
    normalize_rows(centers);
  }
  return Codebook(std::move(centers), opts.mode);
}

inline Codebook init_codebook(const std::vector<FeatureSet>& features, std::size_t n_words,
                              std::uint64_t seed, const CodebookInitOptions& opts = {}) {
  return init_codebook(std::span<const FeatureSet>(features), n_words, seed, opts);
}

}  // namespace jcf
