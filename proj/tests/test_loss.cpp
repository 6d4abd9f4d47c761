#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "error.hpp"
#include "loss.hpp"
#include "oracles.hpp"
#include "rng.hpp"
#include "sparse.hpp"

using namespace pclab;

TEST_CASE("rademacher probes are deterministic signs") {
    const auto z = rademacher(5, 1000);
    double sum = 0.0;
    for (double v : z) {
        CHECK((v == 1.0 || v == -1.0));
        sum += v;
    }
    // Balanced to within a few standard deviations (sigma = sqrt(1000)).
    CHECK(std::abs(sum) < 150.0);
    CHECK(rademacher(5, 1000) == z);
    CHECK(rademacher(6, 1000) != z);
}

TEST_CASE("scatter_matvec equals the row-wise matvec") {
    const auto a = gen_poisson(2, 4, 3);
    const auto csr = coo_to_csr(a);
    std::vector<double> x(16);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = uniform_at(8, i) - 0.5;
    const auto y = scatter_matvec(a.rows, a.cols, a.values, x, a.n_rows);
    const auto want = csr_matvec(csr, x);
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(y[i] == doctest::Approx(want[i]).epsilon(1e-13));
}

TEST_CASE("llt_matvec matches the dense composition") {
    // Random lower factor on the IC pattern of a Poisson matrix.
    const auto a = gen_poisson(2, 3);
    auto l = lower_triangle(a);
    for (std::size_t k = 0; k < l.values.size(); ++k)
        l.values[k] = uniform_at(21, k) + (l.rows[k] == l.cols[k] ? 1.0 : -0.5);

    std::vector<double> z(9);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = uniform_at(22, i) * 2.0 - 1.0;

    const auto got = llt_matvec(l, z);
    const auto ld = oracle::dense_from_coo(l);
    const auto want =
        oracle::dense_matvec(ld, oracle::dense_matvec(oracle::dense_transpose(ld), z));
    for (std::size_t i = 0; i < z.size(); ++i)
        CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
}

TEST_CASE("hutchinson loss on the 1x1 case") {
    // L = [2], A = [3], z = [1]: residual 4 - 3 = 1, loss 1,
    // gradient 4 l (l^2 - a) = 8.
    const auto l = make_coo(1, 1, {0}, {0}, {2.0});
    const auto a = coo_to_csr(make_coo(1, 1, {0}, {0}, {3.0}));
    const std::vector<double> z{1.0};
    const auto res = hutchinson_loss(l, a, z, true);
    CHECK(res.value == doctest::Approx(1.0));
    REQUIRE(res.grad.size() == 1);
    CHECK(res.grad[0] == doctest::Approx(8.0));
}

TEST_CASE("exact factor gives zero loss") {
    const auto a = gen_poisson(2, 3, 11);
    const auto d = oracle::dense_from_coo(a);
    const auto lfull = oracle::dense_cholesky(d);
    std::vector<Index> rows, cols;
    std::vector<double> values;
    for (std::size_t i = 0; i < lfull.size(); ++i)
        for (std::size_t j = 0; j <= i; ++j)
            if (lfull[i][j] != 0.0) {
                rows.push_back(static_cast<Index>(i));
                cols.push_back(static_cast<Index>(j));
                values.push_back(lfull[i][j]);
            }
    const auto l = make_coo(9, 9, rows, cols, values);
    const auto z = rademacher(1, 9);
    const auto res = hutchinson_loss(l, coo_to_csr(a), z, false);
    CHECK(res.value < 1e-20);

    // Any perturbation must raise it.
    auto lp = l;
    lp.values[3] += 0.05;
    CHECK(hutchinson_loss(lp, coo_to_csr(a), z, false).value > 1e-6);
}

TEST_CASE("analytic gradient matches central differences") {
    const auto a = gen_poisson(2, 3, 4);
    auto l = lower_triangle(a);
    for (std::size_t k = 0; k < l.values.size(); ++k)
        l.values[k] = uniform_at(31, k) * 2.0 - 0.5;
    const auto acsr = coo_to_csr(a);
    const auto z = rademacher(7, 9);

    const auto res = hutchinson_loss(l, acsr, z, true);
    REQUIRE(res.grad.size() == l.values.size());
    for (std::size_t k = 0; k < l.values.size(); ++k) {
        const double h = 1e-6 * std::max(1.0, std::abs(l.values[k]));
        auto lp = l;
        lp.values[k] += h;
        auto lm = l;
        lm.values[k] -= h;
        const double fd = (hutchinson_loss(lp, acsr, z, false).value -
                           hutchinson_loss(lm, acsr, z, false).value) /
                          (2.0 * h);
        CHECK(res.grad[k] == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("loss checks shapes") {
    const auto l = make_coo(2, 2, {0, 1}, {0, 1}, {1.0, 1.0});
    const auto a = coo_to_csr(make_coo(3, 3, {0}, {0}, {1.0}));
    const std::vector<double> z{1.0, -1.0};
    CHECK_THROWS_AS(hutchinson_loss(l, a, z, false), DimensionError);
}
