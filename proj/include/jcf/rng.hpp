#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "jcf/linalg.hpp"

namespace jcf {

// 64-bit FNV-1a; stable across platforms, unlike std::hash.
inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

using Rng = std::mt19937_64;

// Derives independent generators from one root seed, keyed by stream name
// ("dataset", "init", "batching", ...). Drawing from one stream never shifts
// another, so reordering batches leaves initialization untouched.
class SeedSplitter {
 public:
  explicit SeedSplitter(std::uint64_t root) : root_(root) {}

  std::uint64_t seed_for(std::string_view stream, std::uint64_t index = 0) const {
    return splitmix64(splitmix64(root_ ^ fnv1a64(stream)) + index);
  }

  Rng stream(std::string_view name, std::uint64_t index = 0) const {
    return Rng(seed_for(name, index));
  }

  std::uint64_t root() const noexcept { return root_; }

 private:
  std::uint64_t root_;
};

inline void fill_normal(std::span<double> out, Rng& rng, double stddev = 1.0) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : out) v = dist(rng);
}

inline Vector random_normal(std::size_t n, Rng& rng, double stddev = 1.0) {
  Vector v(n);
  fill_normal(v.span(), rng, stddev);
  return v;
}

inline Matrix random_normal(std::size_t rows, std::size_t cols, Rng& rng, double stddev = 1.0) {
  Matrix m(rows, cols);
  fill_normal(m.span(), rng, stddev);
  return m;
}

inline Tensor3 random_normal(std::size_t count, std::size_t rows, std::size_t cols, Rng& rng,
                             double stddev = 1.0) {
  Tensor3 t(count, rows, cols);
  fill_normal(t.span(), rng, stddev);
  return t;
}

}  // namespace jcf
