#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "error.hpp"
#include "krylov.hpp"
#include "oracles.hpp"
#include "precond.hpp"
#include "rng.hpp"
#include "sparse.hpp"

using namespace pclab;

namespace {

std::vector<double> seeded_rhs(std::uint64_t seed, std::size_t n) {
    std::vector<double> b(n);
    for (std::size_t i = 0; i < n; ++i) b[i] = 2.0 * uniform_at(seed, i) - 1.0;
    return b;
}

LowerFactor identity_factor(Index n) {
    std::vector<Index> idx(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    return LowerFactor{
        make_coo(n, n, idx, idx, std::vector<double>(idx.size(), 1.0))};
}

}  // namespace

TEST_CASE("triangular solves on hand instances") {
    // L = [[2,0],[1,1]], b = [4,3]: x0 = 2, x1 = 3 - 2 = 1.
    const auto l = coo_to_csr(make_coo(2, 2, {0, 1, 1}, {0, 0, 1}, {2.0, 1.0, 1.0}));
    CHECK(tri_solve_lower(l, std::vector<double>{4.0, 3.0}) ==
          std::vector<double>{2.0, 1.0});

    // U = [[2,1],[0,1]], b = [5,1]: x1 = 1, x0 = (5-1)/2 = 2.
    const auto u = coo_to_csr(make_coo(2, 2, {0, 0, 1}, {0, 1, 1}, {2.0, 1.0, 1.0}));
    CHECK(tri_solve_upper(u, std::vector<double>{5.0, 1.0}) ==
          std::vector<double>{2.0, 1.0});

    const auto eye = coo_to_csr(identity_factor(3).matrix);
    const std::vector<double> b{1.0, -2.0, 3.0};
    CHECK(tri_solve_lower(eye, b) == b);
    CHECK(tri_solve_upper(eye, b) == b);
}

TEST_CASE("triangular solve residual on a random factor") {
    const auto a = gen_poisson(2, 10, 6);
    auto lower = lower_triangle(a);
    for (std::size_t k = 0; k < lower.values.size(); ++k)
        lower.values[k] = lower.rows[k] == lower.cols[k]
                              ? 1.0 + uniform_at(41, k)
                              : uniform_at(41, k) - 0.5;
    const auto l = coo_to_csr(lower);
    const auto b = seeded_rhs(42, 100);

    const auto x = tri_solve_lower(l, b);
    const auto lx = csr_matvec(l, x);
    double err = 0.0, bn = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        err += (lx[i] - b[i]) * (lx[i] - b[i]);
        bn += b[i] * b[i];
    }
    CHECK(std::sqrt(err / bn) < 1e-12);

    const auto u = csr_transpose(l);
    const auto xu = tri_solve_upper(u, b);
    const auto ux = csr_matvec(u, xu);
    err = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i)
        err += (ux[i] - b[i]) * (ux[i] - b[i]);
    CHECK(std::sqrt(err / bn) < 1e-12);
}

TEST_CASE("triangular solves reject bad structure") {
    const auto zero_diag =
        coo_to_csr(make_coo(2, 2, {0, 1}, {0, 0}, {1.0, 1.0}));
    CHECK_THROWS_WITH_AS(tri_solve_lower(zero_diag, std::vector<double>{1.0, 1.0}),
                         doctest::Contains("row 1"), NumericError);

    const auto not_lower =
        coo_to_csr(make_coo(2, 2, {0, 0, 1}, {0, 1, 1}, {1.0, 1.0, 1.0}));
    CHECK_THROWS_AS(tri_solve_lower(not_lower, std::vector<double>{1.0, 1.0}),
                    FormatError);
}

TEST_CASE("cg solves the identity in one iteration") {
    const auto a = coo_to_csr(csr_to_coo(coo_to_csr(identity_factor(5).matrix)));
    const auto b = seeded_rhs(7, 5);
    const auto [x, rep] = cg(a, b, {});
    CHECK(rep.converged);
    CHECK(rep.iterations == 1);
    for (std::size_t i = 0; i < b.size(); ++i)
        CHECK(x[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("cg error decreases monotonically in the A norm") {
    const auto coo = gen_poisson(2, 6, 12);
    const auto a = coo_to_csr(coo);
    const auto d = oracle::dense_from_coo(coo);
    const auto b = seeded_rhs(9, 36);
    const auto xstar = oracle::dense_solve_spd(d, b);

    double prev = 1e300;
    for (Index iters = 1; iters <= 12; ++iters) {
        SolveConfig cfg;
        cfg.max_iters = iters;
        cfg.rel_tol = 1e-300;
        const auto [x, rep] = cg(a, b, cfg);
        const auto e = oracle::sub(x, xstar);
        const double anorm = std::sqrt(
            std::max(0.0, oracle::norm2(oracle::dense_matvec(d, e)) > 0.0
                              ? [&] {
                                    double s = 0.0;
                                    const auto ae = oracle::dense_matvec(d, e);
                                    for (std::size_t i = 0; i < e.size(); ++i)
                                        s += e[i] * ae[i];
                                    return s;
                                }()
                              : 0.0));
        CHECK(anorm <= prev * (1.0 + 1e-10));
        prev = anorm;
    }
}

TEST_CASE("pcg with exact factor converges immediately") {
    // Tridiagonal: IC(0) carries no dropped fill, so it is exact.
    std::vector<Index> rows, cols;
    std::vector<double> values;
    const Index n = 40;
    for (Index i = 0; i < n; ++i) {
        rows.push_back(i);
        cols.push_back(i);
        values.push_back(2.0);
        if (i + 1 < n) {
            rows.push_back(i + 1);
            cols.push_back(i);
            values.push_back(-1.0);
            rows.push_back(i);
            cols.push_back(i + 1);
            values.push_back(-1.0);
        }
    }
    const auto a = make_coo(n, n, rows, cols, values);
    const auto [x, rep] = pcg(coo_to_csr(a), seeded_rhs(3, 40), ic0(a), {});
    CHECK(rep.converged);
    CHECK(rep.iterations <= 2);
    CHECK_FALSE(rep.residual_mismatch);
}

TEST_CASE("pcg with the identity factor replays cg") {
    const auto coo = gen_poisson(2, 8, 2);
    const auto a = coo_to_csr(coo);
    const auto b = seeded_rhs(11, 64);
    SolveConfig cfg;
    cfg.record_residuals = true;

    Preconditioner ident;
    ident.kind = PrecondKind::IC0;
    ident.factor = identity_factor(64);

    const auto [x1, r1] = cg(a, b, cfg);
    const auto [x2, r2] = pcg(a, b, ident, cfg);
    CHECK(r1.iterations == r2.iterations);
    REQUIRE(r1.residual_history.size() == r2.residual_history.size());
    for (std::size_t k = 0; k < r1.residual_history.size(); ++k)
        CHECK(r2.residual_history[k] ==
              doctest::Approx(r1.residual_history[k]).epsilon(1e-12));
}

TEST_CASE("preconditioner quality ordering on a poisson instance") {
    const auto coo = gen_poisson(2, 32);
    const auto a = coo_to_csr(coo);
    const auto b = seeded_rhs(5, 1024);

    const auto [xn, rn] = cg(a, b, {});
    const auto [xj, rj] = pcg(a, b, jacobi(coo), {});
    const auto [xi, ri] = pcg(a, b, ic0(coo), {});
    CHECK(rn.converged);
    CHECK(rj.converged);
    CHECK(ri.converged);
    // Constant-coefficient diagonal is uniform, so Jacobi merely
    // rescales and matches plain CG; IC(0) must beat both clearly.
    CHECK(ri.iterations < rn.iterations / 3);
    CHECK(rj.iterations <= rn.iterations);

    // Solutions agree with the dense oracle.
    const auto xstar =
        oracle::dense_solve_spd(oracle::dense_from_coo(coo), b);
    for (std::size_t i = 0; i < 1024; i += 97)
        CHECK(xi[i] == doctest::Approx(xstar[i]).epsilon(1e-4));
}

TEST_CASE("report bookkeeping") {
    const auto coo = gen_poisson(2, 8, 1);
    const auto a = coo_to_csr(coo);
    const auto b = seeded_rhs(2, 64);
    SolveConfig cfg;
    cfg.record_residuals = true;

    const auto [x, rep] = pcg(a, b, ic0(coo), cfg);
    CHECK(rep.converged);
    CHECK(rep.residual_history.size() ==
          static_cast<std::size_t>(rep.iterations) + 1);
    CHECK(rep.final_rel_residual <= 1e-6);
    CHECK(rep.residual_history.back() == rep.final_rel_residual);
    CHECK(rep.true_rel_residual < 1e-5);
    CHECK_FALSE(rep.residual_mismatch);
    CHECK(rep.total_time == doctest::Approx(rep.p_time + rep.cg_time));
    CHECK(rep.tri_solve_time_per_iter >= 0.0);

    SUBCASE("zero rhs converges instantly") {
        const auto [x0, r0] = cg(a, std::vector<double>(64, 0.0), cfg);
        CHECK(r0.converged);
        CHECK(r0.iterations == 0);
        for (double v : x0) CHECK(v == 0.0);
    }

    SUBCASE("iteration cap reports non-convergence without throwing") {
        SolveConfig tight;
        tight.max_iters = 2;
        const auto [xt, rt] = cg(a, b, tight);
        CHECK_FALSE(rt.converged);
        CHECK(rt.iterations == 2);
        CHECK(rt.final_rel_residual > 1e-6);
    }

    SUBCASE("json serialization carries every field") {
        const auto j = report_to_json(rep);
        CHECK(j.at("iterations").get<Index>() == rep.iterations);
        CHECK(j.at("converged").get<bool>());
        CHECK(j.at("residual_history").size() == rep.residual_history.size());
        CHECK(j.at("total_time").get<double>() == rep.total_time);
    }
}

TEST_CASE("csr_transpose round trips") {
    const auto a = gen_poisson(2, 5, 8);
    const auto csr = coo_to_csr(a);
    const auto t = csr_transpose(csr);
    CHECK(csr_to_coo(csr_transpose(t)) == a);
    // Symmetric matrix: transpose equals the original.
    CHECK(csr_to_coo(t) == a);
}
