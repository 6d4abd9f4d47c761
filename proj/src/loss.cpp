#include "loss.hpp"

#include <string>

#include "error.hpp"
#include "rng.hpp"

namespace pclab {

std::vector<double> rademacher(std::uint64_t seed, std::size_t n) {
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i)
        z[i] = (bits_at(seed, i) >> 63) ? 1.0 : -1.0;
    return z;
}

std::vector<double> scatter_matvec(std::span<const Index> rows,
                                   std::span<const Index> cols,
                                   std::span<const double> values,
                                   std::span<const double> x, Index n_out) {
    if (rows.size() != values.size() || cols.size() != values.size())
        throw DimensionError("scatter_matvec: index/value lengths differ");
    std::vector<double> y(static_cast<std::size_t>(n_out), 0.0);
    for (std::size_t k = 0; k < values.size(); ++k) {
        const auto t = values[k] * x[static_cast<std::size_t>(cols[k])];
        y[static_cast<std::size_t>(rows[k])] += t;
    }
    return y;
}

std::vector<double> llt_matvec(const SparseCoo& l, std::span<const double> z) {
    if (l.n_rows != l.n_cols || static_cast<Index>(z.size()) != l.n_rows)
        throw DimensionError("llt_matvec: shape mismatch");
    const auto u = scatter_matvec(l.cols, l.rows, l.values, z, l.n_rows);
    return scatter_matvec(l.rows, l.cols, l.values, u, l.n_rows);
}

LossResult hutchinson_loss(const SparseCoo& l, const SparseCsr& a,
                           std::span<const double> z, bool with_grad) {
    if (a.n_rows != l.n_rows || a.n_cols != l.n_cols)
        throw DimensionError("hutchinson_loss: factor/matrix shape mismatch");
    if (static_cast<Index>(z.size()) != a.n_rows)
        throw DimensionError("hutchinson_loss: probe length mismatch");

    const auto u = scatter_matvec(l.cols, l.rows, l.values, z, l.n_rows);
    auto r = scatter_matvec(l.rows, l.cols, l.values, u, l.n_rows);
    const auto az = csr_matvec(a, z);
    LossResult out;
    for (std::size_t i = 0; i < r.size(); ++i) {
        r[i] -= az[i];
        out.value += r[i] * r[i];
    }
    if (!with_grad) return out;

    std::vector<double> s(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) s[i] = 2.0 * r[i];
    const auto st = scatter_matvec(l.cols, l.rows, l.values, s, l.n_rows);
    out.grad.resize(l.values.size());
    for (std::size_t k = 0; k < l.values.size(); ++k) {
        const auto i = static_cast<std::size_t>(l.rows[k]);
        const auto j = static_cast<std::size_t>(l.cols[k]);
        out.grad[k] = s[i] * u[j] + st[j] * z[i];
    }
    return out;
}

}  // namespace pclab
