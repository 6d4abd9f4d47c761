#include "sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>

#include "error.hpp"
#include "rng.hpp"

namespace pclab {

namespace {

std::string entry_str(Index i, Index j) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "(%lld, %lld)", static_cast<long long>(i),
                  static_cast<long long>(j));
    return buf;
}

}  // namespace

void SparseCoo::validate() const {
    if (n_rows < 0 || n_cols < 0)
        throw FormatError("coo: negative dimensions");
    const auto nnz = values.size();
    if (rows.size() != nnz || cols.size() != nnz)
        throw FormatError("coo: rows/cols/values lengths differ");
    for (std::size_t k = 0; k < nnz; ++k) {
        if (rows[k] < 0 || rows[k] >= n_rows || cols[k] < 0 || cols[k] >= n_cols)
            throw FormatError("coo: entry " + entry_str(rows[k], cols[k]) +
                              " out of bounds");
        if (k > 0) {
            const bool ordered = rows[k - 1] < rows[k] ||
                                 (rows[k - 1] == rows[k] && cols[k - 1] < cols[k]);
            if (!ordered)
                throw FormatError("coo: entries not sorted or duplicate at " +
                                  entry_str(rows[k], cols[k]));
        }
    }
}

void LowerFactor::validate() const {
    matrix.validate();
    if (matrix.n_rows != matrix.n_cols)
        throw DimensionError("lower factor: matrix not square");
    std::vector<char> has_diag(static_cast<std::size_t>(matrix.n_rows), 0);
    for (std::size_t k = 0; k < matrix.values.size(); ++k) {
        const Index i = matrix.rows[k], j = matrix.cols[k];
        if (j > i)
            throw FormatError("lower factor: entry " + entry_str(i, j) +
                              " above diagonal");
        if (i == j) {
            if (!(matrix.values[k] > 0.0))
                throw NumericError("lower factor: nonpositive diagonal at row " +
                                   std::to_string(i));
            has_diag[static_cast<std::size_t>(i)] = 1;
        }
    }
    for (Index i = 0; i < matrix.n_rows; ++i)
        if (!has_diag[static_cast<std::size_t>(i)])
            throw FormatError("lower factor: missing diagonal at row " +
                              std::to_string(i));
}

SparseCoo make_coo(Index n_rows, Index n_cols, std::vector<Index> rows,
                   std::vector<Index> cols, std::vector<double> values) {
    if (rows.size() != cols.size() || rows.size() != values.size())
        throw FormatError("make_coo: rows/cols/values lengths differ");
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (rows[a] != rows[b]) return rows[a] < rows[b];
        return cols[a] < cols[b];
    });
    SparseCoo out;
    out.n_rows = n_rows;
    out.n_cols = n_cols;
    out.rows.reserve(rows.size());
    out.cols.reserve(rows.size());
    out.values.reserve(rows.size());
    for (std::size_t k : order) {
        out.rows.push_back(rows[k]);
        out.cols.push_back(cols[k]);
        out.values.push_back(values[k]);
    }
    out.validate();
    return out;
}

SparseCsr coo_to_csr(const SparseCoo& m) {
    m.validate();
    SparseCsr out;
    out.n_rows = m.n_rows;
    out.n_cols = m.n_cols;
    out.row_ptr.assign(static_cast<std::size_t>(m.n_rows) + 1, 0);
    for (Index r : m.rows) out.row_ptr[static_cast<std::size_t>(r) + 1]++;
    for (std::size_t i = 1; i < out.row_ptr.size(); ++i)
        out.row_ptr[i] += out.row_ptr[i - 1];
    out.cols = m.cols;
    out.values = m.values;
    return out;
}

SparseCoo csr_to_coo(const SparseCsr& m) {
    SparseCoo out;
    out.n_rows = m.n_rows;
    out.n_cols = m.n_cols;
    out.cols = m.cols;
    out.values = m.values;
    out.rows.resize(m.cols.size());
    for (Index i = 0; i < m.n_rows; ++i)
        for (Index k = m.row_ptr[static_cast<std::size_t>(i)];
             k < m.row_ptr[static_cast<std::size_t>(i) + 1]; ++k)
            out.rows[static_cast<std::size_t>(k)] = i;
    out.validate();
    return out;
}

std::vector<double> csr_matvec(const SparseCsr& a, std::span<const double> x) {
    if (static_cast<Index>(x.size()) != a.n_cols)
        throw DimensionError("matvec: x length " + std::to_string(x.size()) +
                             " != n_cols " + std::to_string(a.n_cols));
    std::vector<double> y(static_cast<std::size_t>(a.n_rows), 0.0);
    for (Index i = 0; i < a.n_rows; ++i) {
        double acc = 0.0;
        for (Index k = a.row_ptr[static_cast<std::size_t>(i)];
             k < a.row_ptr[static_cast<std::size_t>(i) + 1]; ++k)
            acc += a.values[static_cast<std::size_t>(k)] *
                   x[static_cast<std::size_t>(a.cols[static_cast<std::size_t>(k)])];
        y[static_cast<std::size_t>(i)] = acc;
    }
    return y;
}

SparseCsr csr_transpose(const SparseCsr& a) {
    SparseCsr t;
    t.n_rows = a.n_cols;
    t.n_cols = a.n_rows;
    t.row_ptr.assign(static_cast<std::size_t>(a.n_cols) + 1, 0);
    for (Index c : a.cols) t.row_ptr[static_cast<std::size_t>(c) + 1]++;
    for (std::size_t i = 1; i < t.row_ptr.size(); ++i)
        t.row_ptr[i] += t.row_ptr[i - 1];
    t.cols.resize(a.cols.size());
    t.values.resize(a.values.size());
    std::vector<Index> next(t.row_ptr.begin(), t.row_ptr.end() - 1);
    for (Index i = 0; i < a.n_rows; ++i)
        for (Index k = a.row_ptr[static_cast<std::size_t>(i)];
             k < a.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
            const auto c = static_cast<std::size_t>(a.cols[static_cast<std::size_t>(k)]);
            const auto slot = static_cast<std::size_t>(next[c]++);
            t.cols[slot] = i;
            t.values[slot] = a.values[static_cast<std::size_t>(k)];
        }
    return t;
}

namespace {

// Binary search for (row, col) in a sorted COO; returns value index or -1.
std::ptrdiff_t find_entry(const SparseCoo& a, Index row, Index col) {
    std::size_t lo = 0, hi = a.values.size();
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (a.rows[mid] < row || (a.rows[mid] == row && a.cols[mid] < col))
            lo = mid + 1;
        else
            hi = mid;
    }
    if (lo < a.values.size() && a.rows[lo] == row && a.cols[lo] == col)
        return static_cast<std::ptrdiff_t>(lo);
    return -1;
}

}  // namespace

bool is_symmetric(const SparseCoo& a) {
    if (a.n_rows != a.n_cols) return false;
    for (std::size_t k = 0; k < a.values.size(); ++k) {
        if (a.rows[k] == a.cols[k]) continue;
        const auto t = find_entry(a, a.cols[k], a.rows[k]);
        if (t < 0 || a.values[static_cast<std::size_t>(t)] != a.values[k])
            return false;
    }
    return true;
}

SparseCoo lower_triangle(const SparseCoo& a) {
    if (a.n_rows != a.n_cols)
        throw DimensionError("lower_triangle: matrix not square");
    if (!is_symmetric(a))
        throw FormatError("lower_triangle: matrix not symmetric");
    SparseCoo out;
    out.n_rows = a.n_rows;
    out.n_cols = a.n_cols;
    for (std::size_t k = 0; k < a.values.size(); ++k) {
        if (a.rows[k] < a.cols[k]) continue;
        out.rows.push_back(a.rows[k]);
        out.cols.push_back(a.cols[k]);
        out.values.push_back(a.values[k]);
    }
    return out;
}

std::pair<SparseCoo, double> scale_by_std(const SparseCoo& a) {
    if (a.values.empty()) return {a, 1.0};
    const double n = static_cast<double>(a.values.size());
    double mean = 0.0;
    for (double v : a.values) mean += v;
    mean /= n;
    double var = 0.0, amax = 0.0;
    for (double v : a.values) {
        var += (v - mean) * (v - mean);
        amax = std::max(amax, std::abs(v));
    }
    const double sd = std::sqrt(var / n);
    // All-equal values leave sd at rounding-noise level; scaling by it
    // would blow the matrix up, so treat the spread as zero.
    if (sd <= 1e-13 * amax) return {a, 1.0};
    SparseCoo out = a;
    for (double& v : out.values) v /= sd;
    return {out, sd};
}

namespace {

// Cell-centred grid assembly. Each axis-aligned face couples its two
// cells with the harmonic mean of their conductivities; boundary faces
// see only their own cell (Dirichlet wall). Constant k == 1 reduces to
// the classic 5/7-point stencil with diagonal 2*dim.
SparseCoo assemble_poisson(int dim, Index m,
                           const std::vector<double>& cell_k) {
    const Index n = dim == 2 ? m * m : m * m * m;
    std::vector<double> diag(static_cast<std::size_t>(n), 0.0);
    std::vector<Index> rows, cols;
    std::vector<double> values;
    rows.reserve(static_cast<std::size_t>(n) * 2 * dim);
    cols.reserve(static_cast<std::size_t>(n) * 2 * dim);
    values.reserve(static_cast<std::size_t>(n) * 2 * dim);

    const Index strides[3] = {1, m, m * m};
    const auto k_of = [&](Index c) { return cell_k[static_cast<std::size_t>(c)]; };

    const Index mz = dim == 3 ? m : 1;
    for (Index iz = 0; iz < mz; ++iz) {
        for (Index iy = 0; iy < m; ++iy) {
            for (Index ix = 0; ix < m; ++ix) {
                const Index c = ix + m * iy + m * m * iz;
                const Index coord[3] = {ix, iy, iz};
                for (int ax = 0; ax < dim; ++ax) {
                    // Low side of the cell along this axis.
                    if (coord[ax] == 0) {
                        diag[static_cast<std::size_t>(c)] += k_of(c);
                    }
                    // High side: interior face owned by the lower cell.
                    if (coord[ax] + 1 < m) {
                        const Index nb = c + strides[ax];
                        const double kf =
                            2.0 * k_of(c) * k_of(nb) / (k_of(c) + k_of(nb));
                        diag[static_cast<std::size_t>(c)] += kf;
                        diag[static_cast<std::size_t>(nb)] += kf;
                        rows.push_back(c);
                        cols.push_back(nb);
                        values.push_back(-kf);
                        rows.push_back(nb);
                        cols.push_back(c);
                        values.push_back(-kf);
                    } else {
                        diag[static_cast<std::size_t>(c)] += k_of(c);
                    }
                }
            }
        }
    }
    for (Index i = 0; i < n; ++i) {
        rows.push_back(i);
        cols.push_back(i);
        values.push_back(diag[static_cast<std::size_t>(i)]);
    }
    return make_coo(n, n, std::move(rows), std::move(cols), std::move(values));
}

}  // namespace

SparseCoo gen_poisson(int dim, Index m) {
    if (dim != 2 && dim != 3)
        throw DimensionError("gen_poisson: dim must be 2 or 3");
    if (m < 1) throw DimensionError("gen_poisson: m must be >= 1");
    const Index n = dim == 2 ? m * m : m * m * m;
    return assemble_poisson(dim, m, std::vector<double>(static_cast<std::size_t>(n), 1.0));
}

SparseCoo gen_poisson(int dim, Index m, std::uint64_t coeff_seed) {
    if (dim != 2 && dim != 3)
        throw DimensionError("gen_poisson: dim must be 2 or 3");
    if (m < 1) throw DimensionError("gen_poisson: m must be >= 1");
    const Index n = dim == 2 ? m * m : m * m * m;
    std::vector<double> k(static_cast<std::size_t>(n));
    for (Index c = 0; c < n; ++c) {
        const double u = uniform_at(coeff_seed, static_cast<std::uint64_t>(c));
        k[static_cast<std::size_t>(c)] = std::pow(10.0, 2.0 * u - 1.0);
    }
    return assemble_poisson(dim, m, k);
}

}  // namespace pclab
