#pragma once

// Closed-form parameter and multiply counts for every pooling formulation.
//
// Parameter convention (no biases anywhere):
//   Baseline     d_in*D
//   BP           d_in*d + d^2*D
//   BP-Codebook  d_in*d + N*d^2*D + N*d
//   Factorized   d_in*d + 2*d*D
//   JCF-N        d_in*d + 2*N*d*D + N*d
//   JCF-N-R      d_in*d + 2*R*d*D + 2*N*R + N*d
//
// Multiply counts follow the evaluation order of the kernels in pooling.hpp
// stage by stage, so an instrumented kernel run over M locations reports
// exactly M * per_location + fixed.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "jcf/method.hpp"
#include "jcf/op_counts.hpp"

namespace jcf {

struct PoolingConfig {
  Method method = Method::JcfShared;
  std::uint64_t d_in = 2048;
  std::uint64_t d = 256;
  std::uint64_t out_dim = 512;
  std::uint64_t n_words = 0;
  std::uint64_t rank = 0;

  void validate() const {
    auto fail = [&](const std::string& why) {
      throw InputError("pooling config (" + std::string(to_string(method)) + "): " + why);
    };
    if (d_in == 0 || out_dim == 0) fail("d_in and D must be >= 1");
    if (method != Method::Baseline && d == 0) fail("d must be >= 1");
    if (uses_codebook(method) && n_words == 0) fail("N must be >= 1");
    if (method == Method::JcfShared) {
      if (rank == 0) fail("R must be >= 1");
      if (rank > n_words) fail("R must not exceed N");
    }
  }
};

struct CostReport {
  std::uint64_t param_count = 0;
  OpCounts per_location;  // pooling-stage multiplies for one location
  OpCounts fixed;         // once per sample (codeword norms, final projection)
  std::uint64_t flops_per_location = 0;
  std::uint64_t reduction_per_location = 0;
  std::uint64_t peak_intermediate = 0;  // largest temporary vector, in elements
};

inline std::uint64_t param_count(const PoolingConfig& c) {
  c.validate();
  const std::uint64_t din = c.d_in, d = c.d, dd = c.out_dim, n = c.n_words, r = c.rank;
  switch (c.method) {
    case Method::Baseline: return din * dd;
    case Method::BP: return din * d + d * d * dd;
    case Method::BPCodebook: return din * d + n * d * d * dd + n * d;
    case Method::Factorized: return din * d + 2 * d * dd;
    case Method::Jcf: return din * d + 2 * n * d * dd + n * d;
    case Method::JcfShared: return din * d + 2 * r * d * dd + 2 * n * r + n * d;
  }
  return 0;
}

inline CostReport flops_estimate(const PoolingConfig& c) {
  CostReport rep;
  rep.param_count = param_count(c);
  const std::uint64_t d = c.d, dd = c.out_dim, n = c.n_words, r = c.rank;
  OpCounts& loc = rep.per_location;
  // Cosine assignment: |x| plus one dot per codeword; codeword norms once.
  auto assignment = [&]() {
    loc.assignment = d + n * d;
    rep.fixed.assignment = n * d;
  };
  switch (c.method) {
    case Method::Baseline:
      rep.peak_intermediate = dd;
      break;
    case Method::BP:
      loc.outer = d * d;
      rep.fixed.projection = d * d * dd;
      rep.peak_intermediate = d * d;
      break;
    case Method::BPCodebook:
      assignment();
      loc.outer = 2 * n * d + n * n * d * d;
      rep.fixed.projection = n * n * d * d * dd;
      rep.peak_intermediate = n * n * d * d;
      break;
    case Method::Factorized:
      loc.projector = 2 * d * dd;
      loc.product = dd;
      rep.peak_intermediate = std::max(d, dd);
      break;
    case Method::Jcf:
      assignment();
      loc.projector = 2 * dd * d * n;
      loc.contraction = 2 * dd * n;
      loc.product = dd;
      rep.peak_intermediate = std::max({d, n, dd});
      break;
    case Method::JcfShared:
      assignment();
      loc.recombination = 2 * n * r;
      loc.projector = 2 * dd * d * r;
      loc.contraction = 2 * dd * r;
      loc.product = dd;
      rep.peak_intermediate = std::max({d, n, r, dd});
      break;
  }
  rep.flops_per_location = loc.total();
  const std::uint64_t reduced = c.method == Method::Baseline ? dd : d;
  rep.reduction_per_location = c.d_in * reduced + reduced;
  return rep;
}

// One column of the codebook/parameter comparison table.
struct TableColumn {
  std::string label;
  PoolingConfig config;
  std::string printed;  // value as printed in the reference table, e.g. "2.6M"
};

// The twelve configurations of the reference comparison (d_in 2048, d 256,
// D 512). Columns with R = N are the unshared JCF-N models.
inline std::vector<TableColumn> table1_columns() {
  auto col = [](std::string label, Method m, std::uint64_t n, std::uint64_t r, std::string printed) {
    PoolingConfig c{m, 2048, 256, 512, n, r};
    return TableColumn{std::move(label), c, std::move(printed)};
  };
  return {
      col("Baseline", Method::Baseline, 0, 0, "1M"),
      col("BP", Method::BP, 0, 0, "34M"),
      col("BP-Codebook N=4", Method::BPCodebook, 4, 0, "135M"),
      col("Factorized", Method::Factorized, 0, 0, "0.8M"),
      col("JCF-4", Method::Jcf, 4, 0, "1.6M"),
      col("JCF-16-4", Method::JcfShared, 16, 4, "1.6M"),
      col("JCF-16-8", Method::JcfShared, 16, 8, "2.6M"),
      col("JCF-16-16", Method::Jcf, 16, 0, "4.7M"),
      col("JCF-32-4", Method::JcfShared, 32, 4, "1.6M"),
      col("JCF-32-8", Method::JcfShared, 32, 8, "2.6M"),
      col("JCF-32-16", Method::JcfShared, 32, 16, "4.7M"),
      col("JCF-32-32", Method::Jcf, 32, 0, "8.9M"),
  };
}

// Number of decimals in a printed "<number>M" value ("2.6M" -> 1, "34M" -> 0).
inline int printed_decimals(const std::string& printed) {
  const auto dot = printed.find('.');
  if (dot == std::string::npos) return 0;
  return static_cast<int>(printed.size() - dot - 2);
}

// Millions rounded half-up to `decimals` places, as text ("2.6", "34").
inline std::string round_millions(std::uint64_t count, int decimals) {
  std::uint64_t scale = 1;
  for (int i = 0; i < decimals; ++i) scale *= 10;
  // round(count / 1e6 * scale) with integer arithmetic
  const std::uint64_t unit = 1'000'000 / scale;
  const std::uint64_t q = (count + unit / 2) / unit;
  std::string s = std::to_string(q / scale);
  if (decimals > 0) {
    std::string frac = std::to_string(q % scale);
    s += "." + std::string(static_cast<std::size_t>(decimals) - frac.size(), '0') + frac;
  }
  return s;
}

// True when `count` rounded at the precision of `printed` reproduces it.
inline bool matches_printed(std::uint64_t count, const std::string& printed) {
  return round_millions(count, printed_decimals(printed)) + "M" == printed;
}

}  // namespace jcf
