#pragma once

#include <cstdint>

namespace jcf {

// Multiply counts per pipeline stage. Kernels accept an optional pointer to
// one of these and add the length of every inner-product loop they execute;
// the cost model produces the same structure in closed form.
// Scalar work (division by norms, exp, the temperature scale) is not counted.
struct OpCounts {
  std::uint64_t reduction = 0;      // d_in -> d projection and its norm
  std::uint64_t assignment = 0;     // feature norm + cosine dot products
  std::uint64_t outer = 0;          // materialized Kronecker products
  std::uint64_t recombination = 0;  // A^T h and B^T h
  std::uint64_t projector = 0;      // U_i^T x / V_i^T x (or u_i, v_i inner products)
  std::uint64_t contraction = 0;    // h^T (U_i^T x) style reductions
  std::uint64_t product = 0;        // the final product of the two factors
  std::uint64_t projection = 0;     // dense W^T y projection of a materialized vector

  std::uint64_t total() const {
    return reduction + assignment + outer + recombination + projector + contraction + product +
           projection;
  }

  OpCounts& operator+=(const OpCounts& o) {
    reduction += o.reduction;
    assignment += o.assignment;
    outer += o.outer;
    recombination += o.recombination;
    projector += o.projector;
    contraction += o.contraction;
    product += o.product;
    projection += o.projection;
    return *this;
  }

  OpCounts scaled(std::uint64_t k) const {
    OpCounts c = *this;
    c.reduction *= k;
    c.assignment *= k;
    c.outer *= k;
    c.recombination *= k;
    c.projector *= k;
    c.contraction *= k;
    c.product *= k;
    c.projection *= k;
    return c;
  }

  bool operator==(const OpCounts&) const = default;
};

inline OpCounts operator+(OpCounts a, const OpCounts& b) { return a += b; }

}  // namespace jcf
