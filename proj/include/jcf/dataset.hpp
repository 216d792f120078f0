#pragma once

// Synthetic stand-in for an instance-retrieval dataset.
//
// Each instance has a prototype direction p_c and one direction per latent
// mode. A fixed per-instance template gives every location a mode k_l and
// an amplitude a_l; locations come in pairs with amplitudes +a and -a, so
// the mode directions cancel in the mean and survive only in second-order
// statistics:
//   x_l = spread * p_c + mode_center[k_l] + (a_l + noise * xi) * dir[c][k_l]
//         + noise * eps / sqrt(d_in)
// Instances 2j and 2j+1 share their template and their mode directions,
// with the directions rotated by one mode in the second. Telling such a
// pair apart needs to know which mode a feature came from.
// All per-sample randomness is multiplied by noise_scale, so noise_scale = 0
// makes every sample of an instance identical.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "jcf/features.hpp"
#include "jcf/metric.hpp"
#include "jcf/rng.hpp"

namespace jcf {

struct SyntheticDatasetSpec {
  std::size_t n_instances = 32;
  std::size_t samples_per_instance = 10;
  std::size_t raw_dim = 128;
  std::size_t locations = 16;
  std::size_t n_modes = 2;
  double cluster_spread = 0.2;
  double noise_scale = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_instances < 2) throw InputError("dataset: n_instances must be >= 2");
    if (samples_per_instance < 2) throw InputError("dataset: samples_per_instance must be >= 2");
    if (raw_dim == 0 || locations == 0 || n_modes == 0)
      throw InputError("dataset: raw_dim, locations and n_modes must be positive");
    if (!(cluster_spread >= 0.0) || !(noise_scale >= 0.0))
      throw InputError("dataset: spread and noise must be non-negative");
  }
};

struct Sample {
  FeatureSet features;
  Label label = 0;
};

struct Dataset {
  std::vector<Sample> train;
  std::vector<Sample> test;

  std::vector<FeatureSet> train_features() const {
    std::vector<FeatureSet> out;
    out.reserve(train.size());
    for (const auto& s : train) out.push_back(s.features);
    return out;
  }
};

inline Dataset generate_dataset(const SyntheticDatasetSpec& spec) {
  spec.validate();
  const std::size_t din = spec.raw_dim, n_modes = spec.n_modes;
  Rng rng = SeedSplitter(spec.seed).stream("dataset");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick_mode(0, n_modes - 1);
  auto unit = [&]() { return l2_normalize(random_normal(din, rng)); };

  std::vector<Vector> centers;
  for (std::size_t k = 0; k < n_modes; ++k) centers.push_back(unit());

  // Per-coordinate noise std so that a noise vector has unit expected norm.
  const double coord_std = 1.0 / std::sqrt(static_cast<double>(din));
  std::vector<Vector> dirs;
  std::vector<std::size_t> mode(spec.locations);
  std::vector<double> amp(spec.locations);
  Dataset ds;
  for (std::size_t c = 0; c < spec.n_instances; ++c) {
    const Vector proto = unit();
    if (c % 2 == 0) {
      dirs.clear();
      for (std::size_t k = 0; k < n_modes; ++k) dirs.push_back(unit());
      for (std::size_t l = 0; l < spec.locations; l += 2) {
        mode[l] = pick_mode(rng);
        amp[l] = normal(rng);
        if (l + 1 < spec.locations) {
          mode[l + 1] = mode[l];
          amp[l + 1] = -amp[l];
        }
      }
    } else {
      std::rotate(dirs.begin(), dirs.begin() + 1, dirs.end());
    }

    for (std::size_t s = 0; s < spec.samples_per_instance; ++s) {
      FeatureSet fs(din, spec.locations);
      for (std::size_t l = 0; l < spec.locations; ++l) {
        const double a = amp[l] + spec.noise_scale * normal(rng);
        auto x = fs.column(l);
        const Vector& mu = centers[mode[l]];
        const Vector& dir = dirs[mode[l]];
        for (std::size_t k = 0; k < din; ++k)
          x[k] = spec.cluster_spread * proto[k] + mu[k] + a * dir[k] +
                 spec.noise_scale * coord_std * normal(rng);
      }
      Sample sample{std::move(fs), static_cast<Label>(c)};
      // First half of each instance's samples train, the rest are held out.
      if (s < spec.samples_per_instance / 2) {
        ds.train.push_back(std::move(sample));
      } else {
        ds.test.push_back(std::move(sample));
      }
    }
  }
  return ds;
}

}  // namespace jcf
