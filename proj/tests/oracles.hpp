#pragma once

// Dense reference implementations used only by the tests. Everything
// here is written against the textbook definitions, independently of
// the sparse code under test, so the two sides can disagree.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "sparse.hpp"

namespace oracle {

using Dense = std::vector<std::vector<double>>;

inline Dense dense_from_coo(const pclab::SparseCoo& a) {
    Dense d(static_cast<std::size_t>(a.n_rows),
            std::vector<double>(static_cast<std::size_t>(a.n_cols), 0.0));
    for (std::size_t k = 0; k < a.values.size(); ++k)
        d[static_cast<std::size_t>(a.rows[k])][static_cast<std::size_t>(a.cols[k])] +=
            a.values[k];
    return d;
}

inline std::vector<double> dense_matvec(const Dense& a,
                                        const std::vector<double>& x) {
    std::vector<double> y(a.size(), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j) y[i] += a[i][j] * x[j];
    return y;
}

inline Dense dense_matmul(const Dense& a, const Dense& b) {
    const std::size_t n = a.size(), m = b[0].size(), k = b.size();
    Dense c(n, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p)
            for (std::size_t j = 0; j < m; ++j) c[i][j] += a[i][p] * b[p][j];
    return c;
}

inline Dense dense_transpose(const Dense& a) {
    Dense t(a[0].size(), std::vector<double>(a.size(), 0.0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[0].size(); ++j) t[j][i] = a[i][j];
    return t;
}

// Full dense Cholesky, lower triangular. Throws if A is not positive
// definite.
inline Dense dense_cholesky(const Dense& a) {
    const std::size_t n = a.size();
    Dense l(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a[i][j];
            for (std::size_t k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
            if (i == j) {
                if (s <= 0.0)
                    throw std::runtime_error("dense_cholesky: not positive definite");
                l[i][j] = std::sqrt(s);
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    return l;
}

inline std::vector<double> dense_lower_solve(const Dense& l,
                                             const std::vector<double>& b) {
    const std::size_t n = l.size();
    std::vector<double> x(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t j = 0; j < i; ++j) s -= l[i][j] * x[j];
        x[i] = s / l[i][i];
    }
    return x;
}

// Solves L^T x = b with L lower triangular.
inline std::vector<double> dense_upper_solve_t(const Dense& l,
                                               const std::vector<double>& b) {
    const std::size_t n = l.size();
    std::vector<double> x(n, 0.0);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= l[j][ii] * x[j];
        x[ii] = s / l[ii][ii];
    }
    return x;
}

inline std::vector<double> dense_solve_spd(const Dense& a,
                                           const std::vector<double>& b) {
    const Dense l = dense_cholesky(a);
    return dense_upper_solve_t(l, dense_lower_solve(l, b));
}

// Cyclic Jacobi eigenvalue iteration for symmetric matrices. Returns
// the eigenvalues in ascending order.
inline std::vector<double> symmetric_eigenvalues(Dense a) {
    const std::size_t n = a.size();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
    std::sort(ev.begin(), ev.end());
    return ev;
}

inline double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline std::vector<double> sub(const std::vector<double>& a,
                               const std::vector<double>& b) {
    std::vector<double> r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

}  // namespace oracle
