#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace pclab {

using Index = std::int64_t;

// Coordinate-format sparse matrix. Triples are kept sorted
// lexicographically by (row, col) with no duplicates; symmetric
// matrices store both (i,j) and (j,i).
struct SparseCoo {
    Index n_rows = 0;
    Index n_cols = 0;
    std::vector<Index> rows;
    std::vector<Index> cols;
    std::vector<double> values;

    Index nnz() const { return static_cast<Index>(values.size()); }

    // Enforces the storage invariants; throws FormatError on violation.
    void validate() const;

    bool operator==(const SparseCoo&) const = default;
};

// Compressed-row sparse matrix, the execution format for matvec and
// triangular solves. Within each row, columns are strictly increasing.
struct SparseCsr {
    Index n_rows = 0;
    Index n_cols = 0;
    std::vector<Index> row_ptr;
    std::vector<Index> cols;
    std::vector<double> values;

    Index nnz() const { return static_cast<Index>(values.size()); }

    bool operator==(const SparseCsr&) const = default;
};

// Lower-triangular factor: a SparseCoo restricted to row >= col with
// every diagonal entry present and strictly positive.
struct LowerFactor {
    SparseCoo matrix;

    Index n() const { return matrix.n_rows; }

    // Throws FormatError if an entry lies above the diagonal or a
    // diagonal entry is missing; NumericError if a diagonal is <= 0.
    void validate() const;
};

// Build a COO matrix from unsorted triples: sorts and validates.
SparseCoo make_coo(Index n_rows, Index n_cols, std::vector<Index> rows,
                   std::vector<Index> cols, std::vector<double> values);

SparseCsr coo_to_csr(const SparseCoo& m);
SparseCoo csr_to_coo(const SparseCsr& m);

// y_i = sum_j a_ij x_j
std::vector<double> csr_matvec(const SparseCsr& a, std::span<const double> x);

SparseCsr csr_transpose(const SparseCsr& a);

// True when for every stored (i,j,v) with i != j the entry (j,i,v) is
// also stored with the identical value.
bool is_symmetric(const SparseCoo& a);

// Entries with row >= col of a symmetric matrix. Throws DimensionError
// if a is not square, FormatError if not symmetric.
SparseCoo lower_triangle(const SparseCoo& a);

// Divides all stored values by their population standard deviation and
// returns the divisor. A spread below 1e-13 * max|v| is treated as a
// constant-value matrix: values are returned unchanged with scale 1.
std::pair<SparseCoo, double> scale_by_std(const SparseCoo& a);

// Finite-difference Poisson matrix on an m^dim grid (dim 2 or 3) with
// homogeneous Dirichlet boundaries: the 5-point or 7-point stencil.
SparseCoo gen_poisson(int dim, Index m);

// Variable-coefficient variant: per-cell conductivities drawn
// log-uniform in [0.1, 10] from the seeded stream, coupled through
// harmonic face averages. Always symmetric positive definite.
SparseCoo gen_poisson(int dim, Index m, std::uint64_t coeff_seed);

}  // namespace pclab
