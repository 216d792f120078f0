#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <vector>

#include "jcf/metric.hpp"

namespace jcf {

struct EvalResult {
  std::map<std::size_t, double> recall_at;  // K -> fraction of queries with a hit in the top K
  std::size_t n_queries = 0;
  std::vector<std::size_t> clamped_ks;  // requested Ks that exceeded the gallery size
  bool operator==(const EvalResult&) const = default;
};

// Exact nearest-neighbour Recall@K on squared Euclidean distance.
// With same_set, query i is gallery item i and never retrieves itself.
// Neighbours are ranked by (distance, gallery index).
inline EvalResult recall_at_k(const Matrix& queries, const std::vector<Label>& query_labels,
                              const Matrix& gallery, const std::vector<Label>& gallery_labels,
                              const std::vector<std::size_t>& ks, bool same_set) {
  if (gallery.rows() == 0) throw InputError("recall_at_k: empty gallery");
  if (queries.rows() != query_labels.size() || gallery.rows() != gallery_labels.size())
    throw ShapeError("recall_at_k: one label per row required");
  if (queries.cols() != gallery.cols()) throw ShapeError("recall_at_k: embedding dims differ");
  if (same_set && queries.rows() != gallery.rows())
    throw ShapeError("recall_at_k: same_set requires identical query and gallery sets");

  const std::size_t available = gallery.rows() - (same_set ? 1 : 0);
  EvalResult out;
  out.n_queries = queries.rows();
  std::map<std::size_t, std::size_t> effective;
  for (std::size_t k : ks) {
    if (k == 0) throw InputError("recall_at_k: K must be >= 1");
    if (k > available) out.clamped_ks.push_back(k);
    effective[k] = std::min(k, available);
    out.recall_at[k] = 0.0;
  }
  if (available == 0 || queries.rows() == 0) return out;

  std::vector<std::size_t> order(gallery.rows());
  std::vector<double> dist(gallery.rows());
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    for (std::size_t g = 0; g < gallery.rows(); ++g) dist[g] = squared_distance(queries.row(q), gallery.row(g));
    std::iota(order.begin(), order.end(), 0);
    if (same_set) order.erase(order.begin() + static_cast<std::ptrdiff_t>(q));
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
    // Rank of the first same-label neighbour.
    std::size_t first_hit = order.size();
    for (std::size_t r = 0; r < order.size(); ++r)
      if (gallery_labels[order[r]] == query_labels[q]) {
        first_hit = r;
        break;
      }
    for (auto& [k, kk] : effective)
      if (first_hit < kk) out.recall_at[k] += 1.0;
    order.resize(gallery.rows());
  }
  for (auto& [k, v] : out.recall_at) v /= static_cast<double>(queries.rows());
  return out;
}

}  // namespace jcf
