#pragma once

#include <vector>

#include "sparse.hpp"

namespace pclab {

// Node feature columns. Structural columns (0..6) are invariant to
// symmetric row/column permutations; the position embedding is not.
inline constexpr int kNodeFeatures = 9;

// Per-node features of a symmetric matrix, row-major n x kNodeFeatures:
//   0      degree (off-diagonal neighbours)
//   1..4   max, min, mean, population variance of neighbour degrees
//   5      diagonal dominance |a_ii| / (|a_ii| + sum_{j!=i} |a_ij|)
//   6      decay |a_ii| / max_{j!=i} |a_ij|, clipped to [0, 100]
//   7..8   sin(2 pi i / n), cos(2 pi i / n)
// Isolated nodes get zero neighbour statistics and decay 100.
std::vector<double> node_features(const SparseCoo& a);

// Input to the network: one node per row, one edge per lower-triangle
// entry (diagonal included) in canonical (row >= col) orientation, edge
// feature = matrix value divided by sigma.
struct Graph {
    Index n = 0;
    std::vector<Index> edge_rows;
    std::vector<Index> edge_cols;
    std::vector<double> edge_feat;
    std::vector<double> node_feat;
    double sigma = 1.0;

    Index n_edges() const { return static_cast<Index>(edge_feat.size()); }
};

// Throws DimensionError / FormatError unless a is square symmetric.
// sigma is the standard deviation of the lower-triangle values (1 for
// constant-valued matrices).
Graph build_graph(const SparseCoo& a);

}  // namespace pclab
