#include "krylov.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "error.hpp"

namespace pclab {

namespace {

using Clock = std::chrono::steady_clock;

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Preconditioner application with the factor CSR forms built once and
// the triangular-solve time accumulated across iterations.
struct Applier {
    const Preconditioner& p;
    SparseCsr lo, up;
    double tri_seconds = 0.0;

    explicit Applier(const Preconditioner& pc) : p(pc) {
        if (p.kind == PrecondKind::IC0 || p.kind == PrecondKind::NIC ||
            p.kind == PrecondKind::GnnIC) {
            lo = coo_to_csr(p.factor.matrix);
            up = csr_transpose(lo);
        }
    }

    std::vector<double> apply(const std::vector<double>& r) {
        switch (p.kind) {
            case PrecondKind::None:
                return r;
            case PrecondKind::Jacobi: {
                std::vector<double> z(r.size());
                for (std::size_t i = 0; i < r.size(); ++i) z[i] = r[i] / p.diag[i];
                return z;
            }
            default: {
                const auto t0 = Clock::now();
                auto y = tri_solve_lower(lo, r);
                auto z = tri_solve_upper(up, y);
                tri_seconds += std::chrono::duration<double>(Clock::now() - t0).count();
                return z;
            }
        }
    }
};

}  // namespace

std::vector<double> tri_solve_lower(const SparseCsr& l, std::span<const double> b) {
    if (l.n_rows != l.n_cols || static_cast<Index>(b.size()) != l.n_rows)
        throw DimensionError("tri_solve_lower: shape mismatch");
    std::vector<double> x(b.size());
    for (Index i = 0; i < l.n_rows; ++i) {
        double acc = b[static_cast<std::size_t>(i)];
        double diag = 0.0;
        for (Index k = l.row_ptr[static_cast<std::size_t>(i)];
             k < l.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
            const Index j = l.cols[static_cast<std::size_t>(k)];
            if (j < i)
                acc -= l.values[static_cast<std::size_t>(k)] *
                       x[static_cast<std::size_t>(j)];
            else if (j == i)
                diag = l.values[static_cast<std::size_t>(k)];
            else
                throw FormatError("tri_solve_lower: entry above the diagonal in row " +
                                  std::to_string(i));
        }
        if (diag == 0.0)
            throw NumericError("tri_solve_lower: zero diagonal at row " +
                               std::to_string(i));
        x[static_cast<std::size_t>(i)] = acc / diag;
    }
    return x;
}

std::vector<double> tri_solve_upper(const SparseCsr& u, std::span<const double> b) {
    if (u.n_rows != u.n_cols || static_cast<Index>(b.size()) != u.n_rows)
        throw DimensionError("tri_solve_upper: shape mismatch");
    std::vector<double> x(b.size());
    for (Index i = u.n_rows; i-- > 0;) {
        double acc = b[static_cast<std::size_t>(i)];
        double diag = 0.0;
        for (Index k = u.row_ptr[static_cast<std::size_t>(i)];
             k < u.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
            const Index j = u.cols[static_cast<std::size_t>(k)];
            if (j > i)
                acc -= u.values[static_cast<std::size_t>(k)] *
                       x[static_cast<std::size_t>(j)];
            else if (j == i)
                diag = u.values[static_cast<std::size_t>(k)];
            else
                throw FormatError("tri_solve_upper: entry below the diagonal in row " +
                                  std::to_string(i));
        }
        if (diag == 0.0)
            throw NumericError("tri_solve_upper: zero diagonal at row " +
                               std::to_string(i));
        x[static_cast<std::size_t>(i)] = acc / diag;
    }
    return x;
}

std::pair<std::vector<double>, SolveReport> pcg(const SparseCsr& a,
                                                std::span<const double> b,
                                                const Preconditioner& p,
                                                const SolveConfig& cfg) {
    if (a.n_rows != a.n_cols || static_cast<Index>(b.size()) != a.n_rows)
        throw DimensionError("pcg: shape mismatch");
    if (!(cfg.rel_tol > 0.0)) throw DimensionError("pcg: rel_tol must be > 0");
    const auto n = static_cast<std::size_t>(a.n_rows);
    const Index max_iters = cfg.max_iters < 0 ? 10 * a.n_rows : cfg.max_iters;

    SolveReport rep;
    rep.p_time = p.p_time;
    Applier ap(p);
    const auto t0 = Clock::now();

    std::vector<double> x(n, 0.0);
    const double bnorm = norm2(b);
    if (bnorm == 0.0) {
        rep.converged = true;
        if (cfg.record_residuals) rep.residual_history.push_back(0.0);
        rep.cg_time = std::chrono::duration<double>(Clock::now() - t0).count();
        rep.total_time = rep.p_time + rep.cg_time;
        return {std::move(x), rep};
    }

    std::vector<double> r(b.begin(), b.end());
    double rel = norm2(r) / bnorm;
    if (cfg.record_residuals) rep.residual_history.push_back(rel);
    rep.final_rel_residual = rel;
    rep.converged = rel <= cfg.rel_tol;

    if (!rep.converged) {
        auto z = ap.apply(r);
        double rz = dot(r, z);
        std::vector<double> pv = z;
        for (Index k = 1; k <= max_iters; ++k) {
            const auto apv = csr_matvec(a, pv);
            const double pap = dot(pv, apv);
            if (!(pap > 0.0))
                throw NumericError("pcg: nonpositive curvature at iteration " +
                                   std::to_string(k) + " (matrix not SPD?)");
            const double alpha = rz / pap;
            for (std::size_t i = 0; i < n; ++i) {
                x[i] += alpha * pv[i];
                r[i] -= alpha * apv[i];
            }
            rel = norm2(r) / bnorm;
            rep.iterations = k;
            if (cfg.record_residuals) rep.residual_history.push_back(rel);
            if (rel <= cfg.rel_tol) {
                rep.converged = true;
                break;
            }
            z = ap.apply(r);
            const double rz_new = dot(r, z);
            const double beta = rz_new / rz;
            rz = rz_new;
            for (std::size_t i = 0; i < n; ++i) pv[i] = z[i] + beta * pv[i];
        }
        rep.final_rel_residual = rel;
    }

    rep.cg_time = std::chrono::duration<double>(Clock::now() - t0).count();
    rep.total_time = rep.p_time + rep.cg_time;
    if (rep.iterations > 0)
        rep.tri_solve_time_per_iter =
            ap.tri_seconds / static_cast<double>(rep.iterations);

    const auto ax = csr_matvec(a, x);
    std::vector<double> rt(n);
    for (std::size_t i = 0; i < n; ++i) rt[i] = b[i] - ax[i];
    rep.true_rel_residual = norm2(rt) / bnorm;
    rep.residual_mismatch =
        std::abs(rep.true_rel_residual - rep.final_rel_residual) >
        10.0 * cfg.rel_tol;
    return {std::move(x), rep};
}

std::pair<std::vector<double>, SolveReport> cg(const SparseCsr& a,
                                               std::span<const double> b,
                                               const SolveConfig& cfg) {
    return pcg(a, b, make_none(), cfg);
}

nlohmann::json report_to_json(const SolveReport& r) {
    return nlohmann::json{{"iterations", r.iterations},
                          {"converged", r.converged},
                          {"final_rel_residual", r.final_rel_residual},
                          {"true_rel_residual", r.true_rel_residual},
                          {"residual_mismatch", r.residual_mismatch},
                          {"p_time", r.p_time},
                          {"cg_time", r.cg_time},
                          {"total_time", r.total_time},
                          {"tri_solve_time_per_iter", r.tri_solve_time_per_iter},
                          {"residual_history", r.residual_history}};
}

}  // namespace pclab
