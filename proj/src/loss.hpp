#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sparse.hpp"

namespace pclab {

// n values in {-1, +1}, from the high bit of the counter stream.
std::vector<double> rademacher(std::uint64_t seed, std::size_t n);

// y[rows[k]] += values[k] * x[cols[k]] for every k. The gather/scatter
// primitive all stochastic-loss evaluations are built from; entries may
// appear in any order and may collide.
std::vector<double> scatter_matvec(std::span<const Index> rows,
                                   std::span<const Index> cols,
                                   std::span<const double> values,
                                   std::span<const double> x, Index n_out);

// L L^T z computed as two scatter passes over the single lower-triangle
// edge list of L: u = L^T z, then L u. No transpose is materialised.
std::vector<double> llt_matvec(const SparseCoo& l, std::span<const double> z);

struct LossResult {
    double value = 0.0;
    // dLoss/d(l_k), aligned with l.values; empty when not requested.
    std::vector<double> grad;
};

// Stochastic factorisation error ||L L^T z - A z||^2 for one probe z.
// a is the full symmetric matrix, l a lower-triangle factor candidate.
// The gradient for entry k at (i, j) is
//   s[i] * u[j] + (L^T s)[j] * z[i],  s = 2 (L L^T z - A z), u = L^T z,
// the two chain-rule paths through L u and u = L^T z.
LossResult hutchinson_loss(const SparseCoo& l, const SparseCsr& a,
                           std::span<const double> z, bool with_grad);

}  // namespace pclab
