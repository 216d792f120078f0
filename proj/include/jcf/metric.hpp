#pragma once

// Triplet hinge loss on squared Euclidean distances with semi-hard mining.

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <utility>
#include <vector>

#include "jcf/linalg.hpp"
#include "jcf/rng.hpp"

namespace jcf {

using Label = std::int64_t;

struct Batch {
  Matrix embeddings;  // B x D, rows l2-normalized
  std::vector<Label> labels;

  std::size_t size() const noexcept { return labels.size(); }
};

struct Triplet {
  std::size_t anchor;
  std::size_t positive;
  std::size_t negative;
  bool operator==(const Triplet&) const = default;
};

using TripletSet = std::vector<Triplet>;
using PairList = std::vector<std::pair<std::size_t, std::size_t>>;

struct MiningResult {
  TripletSet triplets;
  std::vector<std::size_t> skipped_anchors;  // anchors without a positive or without any negative
};

struct LossResult {
  double loss = 0.0;
  Matrix d_embeddings;
  std::size_t active = 0;  // triplets with a positive hinge
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    s += diff * diff;
  }
  return s;
}

inline Matrix distance_matrix(const Matrix& e) {
  Matrix dist(e.rows(), e.rows());
  for (std::size_t i = 0; i < e.rows(); ++i)
    for (std::size_t j = i + 1; j < e.rows(); ++j) dist(i, j) = dist(j, i) = squared_distance(e.row(i), e.row(j));
  return dist;
}

// Mean over triplets of max(0, |a-p|^2 - |a-n|^2 + margin), with its
// gradient. The subgradient at the kink is taken as zero.
inline LossResult triplet_loss(const Batch& batch, const TripletSet& triplets, double margin) {
  if (!(margin > 0.0)) throw InputError("triplet_loss: margin must be positive");
  if (batch.embeddings.rows() != batch.size())
    throw ShapeError("triplet_loss: one label per embedding row required");
  const Matrix& e = batch.embeddings;
  LossResult out{0.0, Matrix(e.rows(), e.cols()), 0};
  if (triplets.empty()) return out;

  const double scale = 1.0 / static_cast<double>(triplets.size());
  for (const Triplet& t : triplets) {
    auto a = e.row(t.anchor), p = e.row(t.positive), n = e.row(t.negative);
    const double act = squared_distance(a, p) - squared_distance(a, n) + margin;
    if (act <= 0.0) continue;
    out.loss += act * scale;
    ++out.active;
    auto ga = out.d_embeddings.row(t.anchor);
    auto gp = out.d_embeddings.row(t.positive);
    auto gn = out.d_embeddings.row(t.negative);
    for (std::size_t k = 0; k < e.cols(); ++k) {
      ga[k] += 2.0 * scale * (n[k] - p[k]);
      gp[k] -= 2.0 * scale * (a[k] - p[k]);
      gn[k] += 2.0 * scale * (a[k] - n[k]);
    }
  }
  return out;
}

// Every ordered (anchor, positive) pair with equal labels.
inline PairList all_positive_pairs(const std::vector<Label>& labels) {
  PairList pairs;
  for (std::size_t a = 0; a < labels.size(); ++a)
    for (std::size_t p = 0; p < labels.size(); ++p)
      if (a != p && labels[a] == labels[p]) pairs.emplace_back(a, p);
  return pairs;
}

// For each (a, p): the negative with the smallest |a-n|^2 that still exceeds
// |a-p|^2; when no negative is that far, the farthest negative. Ties go to
// the lowest index.
inline MiningResult mine_semi_hard(const Batch& batch, const PairList& pairs,
                                   [[maybe_unused]] double margin) {
  const Matrix dist = distance_matrix(batch.embeddings);
  MiningResult out;
  std::vector<bool> has_positive(batch.size(), false);
  for (const auto& [a, p] : pairs) {
    if (a >= batch.size() || p >= batch.size() || a == p || batch.labels[a] != batch.labels[p])
      throw InputError("mine_semi_hard: invalid anchor/positive pair");
    has_positive[a] = true;
    const double d_ap = dist(a, p);
    std::size_t semi = batch.size(), easiest = batch.size();
    for (std::size_t n = 0; n < batch.size(); ++n) {
      if (batch.labels[n] == batch.labels[a]) continue;
      const double d_an = dist(a, n);
      if (d_an > d_ap && (semi == batch.size() || d_an < dist(a, semi))) semi = n;
      if (easiest == batch.size() || d_an > dist(a, easiest)) easiest = n;
    }
    if (easiest == batch.size()) {
      out.skipped_anchors.push_back(a);
      continue;
    }
    out.triplets.push_back({a, p, semi != batch.size() ? semi : easiest});
  }
  for (std::size_t a = 0; a < batch.size(); ++a)
    if (!has_positive[a] &&
        std::count(batch.labels.begin(), batch.labels.end(), batch.labels[a]) < 2)
      out.skipped_anchors.push_back(a);
  std::sort(out.skipped_anchors.begin(), out.skipped_anchors.end());
  out.skipped_anchors.erase(std::unique(out.skipped_anchors.begin(), out.skipped_anchors.end()),
                            out.skipped_anchors.end());
  return out;
}

inline MiningResult mine_semi_hard(const Batch& batch, double margin) {
  return mine_semi_hard(batch, all_positive_pairs(batch.labels), margin);
}

// Splits the batch into disjoint same-label pairs. Indices of each label are
// shuffled with the seed, paired consecutively (an odd leftover is dropped),
// and the pair list itself is shuffled.
inline PairList build_pairs(const std::vector<Label>& labels, std::uint64_t seed) {
  std::map<Label, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
  Rng rng(seed);
  PairList pairs;
  for (auto& [label, idx] : groups) {
    if (idx.size() < 2)
      throw InputError("build_pairs: label " + std::to_string(label) + " has a single sample");
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t k = 0; k + 1 < idx.size(); k += 2) pairs.emplace_back(idx[k], idx[k + 1]);
  }
  std::shuffle(pairs.begin(), pairs.end(), rng);
  return pairs;
}

}  // namespace jcf
