#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>

#include "error.hpp"
#include "oracles.hpp"
#include "rng.hpp"
#include "sparse.hpp"

using namespace pclab;

namespace {

// 3x3 symmetric test matrix
//   [ 2 0 1 ]
//   [ 0 3 0 ]
//   [ 1 0 4 ]
SparseCoo small_sym() {
    return make_coo(3, 3, {0, 0, 1, 2, 2}, {0, 2, 1, 0, 2},
                    {2.0, 1.0, 3.0, 1.0, 4.0});
}

}  // namespace

TEST_CASE("make_coo sorts triples") {
    const auto a = make_coo(2, 2, {1, 0, 1}, {0, 1, 1}, {3.0, 2.0, 4.0});
    CHECK(a.rows == std::vector<Index>{0, 1, 1});
    CHECK(a.cols == std::vector<Index>{1, 0, 1});
    CHECK(a.values == std::vector<double>{2.0, 3.0, 4.0});
}

TEST_CASE("validate rejects malformed structure") {
    CHECK_THROWS_AS(make_coo(2, 2, {0, 0}, {1, 1}, {1.0, 2.0}), FormatError);
    CHECK_THROWS_AS(make_coo(2, 2, {0}, {2}, {1.0}), FormatError);
    CHECK_THROWS_AS(make_coo(2, 2, {-1}, {0}, {1.0}), FormatError);
    CHECK_THROWS_AS(make_coo(2, 2, {0, 1}, {0}, {1.0, 2.0}), FormatError);
}

TEST_CASE("coo csr round trip") {
    const auto a = small_sym();
    const auto csr = coo_to_csr(a);
    CHECK(csr.row_ptr == std::vector<Index>{0, 2, 3, 5});
    CHECK(csr_to_coo(csr) == a);

    SUBCASE("empty row is preserved") {
        const auto b = make_coo(3, 3, {0, 2}, {0, 2}, {1.0, 1.0});
        CHECK(csr_to_coo(coo_to_csr(b)) == b);
    }
}

TEST_CASE("csr_matvec matches hand result") {
    const auto csr = coo_to_csr(small_sym());
    // A [1 2 3]^T = [2+3, 6, 1+12] = [5, 6, 13]
    const auto y = csr_matvec(csr, std::vector<double>{1.0, 2.0, 3.0});
    CHECK(y == std::vector<double>{5.0, 6.0, 13.0});

    CHECK_THROWS_AS(csr_matvec(csr, std::vector<double>{1.0, 2.0}),
                    DimensionError);
}

TEST_CASE("csr_matvec matches dense oracle on a poisson matrix") {
    const auto a = gen_poisson(2, 5, 77);
    const auto csr = coo_to_csr(a);
    const auto d = oracle::dense_from_coo(a);
    std::vector<double> x(static_cast<std::size_t>(a.n_rows));
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = uniform_at(123, i) - 0.5;
    const auto y = csr_matvec(csr, x);
    const auto yd = oracle::dense_matvec(d, x);
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(y[i] == doctest::Approx(yd[i]).epsilon(1e-14));
}

TEST_CASE("is_symmetric") {
    CHECK(is_symmetric(small_sym()));
    // Break the (2,0) value: pattern still symmetric, values not.
    auto a = small_sym();
    a.values[3] = 1.5;
    CHECK_FALSE(is_symmetric(a));
    // Pattern asymmetry.
    const auto b = make_coo(2, 2, {0, 0, 1}, {0, 1, 1}, {1.0, 2.0, 3.0});
    CHECK_FALSE(is_symmetric(b));
    // Rectangular is never symmetric.
    const auto c = make_coo(2, 3, {0}, {2}, {1.0});
    CHECK_FALSE(is_symmetric(c));
}

TEST_CASE("lower_triangle keeps row >= col entries") {
    const auto l = lower_triangle(small_sym());
    CHECK(l.rows == std::vector<Index>{0, 1, 2, 2});
    CHECK(l.cols == std::vector<Index>{0, 1, 0, 2});
    CHECK(l.values == std::vector<double>{2.0, 3.0, 1.0, 4.0});

    auto a = small_sym();
    a.values[3] = 1.5;
    CHECK_THROWS_AS(lower_triangle(a), FormatError);
}

TEST_CASE("lower factor validate") {
    LowerFactor ok{make_coo(2, 2, {0, 1, 1}, {0, 0, 1}, {1.0, -0.5, 2.0})};
    CHECK_NOTHROW(ok.validate());

    LowerFactor upper{make_coo(2, 2, {0, 0, 1}, {0, 1, 1}, {1.0, 1.0, 2.0})};
    CHECK_THROWS_AS(upper.validate(), FormatError);

    LowerFactor missing{make_coo(2, 2, {1, 1}, {0, 1}, {1.0, 2.0})};
    CHECK_THROWS_AS(missing.validate(), FormatError);

    LowerFactor negdiag{make_coo(2, 2, {0, 1}, {0, 1}, {1.0, -2.0})};
    CHECK_THROWS_AS(negdiag.validate(), NumericError);
}

TEST_CASE("constant poisson 2d is the 5-point stencil") {
    const auto a = gen_poisson(2, 4);
    CHECK(a.n_rows == 16);
    // 16 diagonal entries + 2 * 24 interior faces = 64.
    CHECK(a.nnz() == 64);
    CHECK(is_symmetric(a));
    CHECK(lower_triangle(a).nnz() == 40);

    // Independent construction straight from the stencil definition.
    const Index m = 4;
    oracle::Dense want(16, std::vector<double>(16, 0.0));
    for (Index iy = 0; iy < m; ++iy) {
        for (Index ix = 0; ix < m; ++ix) {
            const auto c = static_cast<std::size_t>(ix + m * iy);
            want[c][c] = 4.0;
            if (ix > 0) want[c][c - 1] = -1.0;
            if (ix < m - 1) want[c][c + 1] = -1.0;
            if (iy > 0) want[c][c - static_cast<std::size_t>(m)] = -1.0;
            if (iy < m - 1) want[c][c + static_cast<std::size_t>(m)] = -1.0;
        }
    }
    CHECK(oracle::dense_from_coo(a) == want);
}

TEST_CASE("constant poisson 3d is the 7-point stencil") {
    const auto a = gen_poisson(3, 4);
    CHECK(a.n_rows == 64);
    // 64 diagonal entries + 2 * 144 interior faces = 352.
    CHECK(a.nnz() == 352);
    CHECK(is_symmetric(a));
    for (std::size_t k = 0; k < a.values.size(); ++k) {
        if (a.rows[k] == a.cols[k])
            CHECK(a.values[k] == 6.0);
        else
            CHECK(a.values[k] == -1.0);
    }
}

TEST_CASE("poisson rejects bad arguments") {
    CHECK_THROWS_AS(gen_poisson(1, 4), DimensionError);
    CHECK_THROWS_AS(gen_poisson(4, 4), DimensionError);
    CHECK_THROWS_AS(gen_poisson(2, 0), DimensionError);
}

TEST_CASE("variable coefficient poisson uses harmonic face averages") {
    const std::uint64_t seed = 42;
    const auto a = gen_poisson(2, 2, seed);
    CHECK(a.n_rows == 4);
    CHECK(is_symmetric(a));

    // Cells 0..3 in x-fastest order; conductivity of cell c is
    // 10^(2u-1) with u = uniform_at(seed, c).
    double k[4];
    for (std::uint64_t c = 0; c < 4; ++c)
        k[c] = std::pow(10.0, 2.0 * uniform_at(seed, c) - 1.0);
    const auto h = [](double p, double q) { return 2.0 * p * q / (p + q); };

    oracle::Dense want(4, std::vector<double>(4, 0.0));
    // x faces: (0,1), (2,3); y faces: (0,2), (1,3).
    want[0][1] = want[1][0] = -h(k[0], k[1]);
    want[2][3] = want[3][2] = -h(k[2], k[3]);
    want[0][2] = want[2][0] = -h(k[0], k[2]);
    want[1][3] = want[3][1] = -h(k[1], k[3]);
    // Every cell touches two boundary walls and two interior faces.
    want[0][0] = 2.0 * k[0] + h(k[0], k[1]) + h(k[0], k[2]);
    want[1][1] = 2.0 * k[1] + h(k[0], k[1]) + h(k[1], k[3]);
    want[2][2] = 2.0 * k[2] + h(k[2], k[3]) + h(k[0], k[2]);
    want[3][3] = 2.0 * k[3] + h(k[2], k[3]) + h(k[1], k[3]);

    const auto got = oracle::dense_from_coo(a);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            CHECK(got[i][j] == doctest::Approx(want[i][j]).epsilon(1e-15));
}

TEST_CASE("variable coefficient poisson is positive definite") {
    const auto a = gen_poisson(2, 5, 9001);
    CHECK(is_symmetric(a));
    CHECK_NOTHROW(oracle::dense_cholesky(oracle::dense_from_coo(a)));

    const auto b = gen_poisson(3, 3, 17);
    CHECK(is_symmetric(b));
    CHECK_NOTHROW(oracle::dense_cholesky(oracle::dense_from_coo(b)));

    SUBCASE("seed changes the values") {
        const auto c = gen_poisson(2, 5, 9002);
        CHECK(c.rows == a.rows);
        CHECK(c.values != a.values);
    }
}

TEST_CASE("scale_by_std divides by the population deviation") {
    const auto a = make_coo(3, 3, {0, 1, 2}, {0, 1, 2}, {1.0, 2.0, 3.0});
    const auto [scaled, sd] = scale_by_std(a);
    // mean 2, variance ((1)^2 + 0 + (1)^2)/3 = 2/3
    CHECK(sd == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(scaled.values[i] * sd == doctest::Approx(a.values[i]).epsilon(1e-15));
}

TEST_CASE("scale_by_std leaves constant matrices alone") {
    const auto a = make_coo(2, 2, {0, 1}, {0, 1}, {5.0, 5.0});
    const auto [scaled, sd] = scale_by_std(a);
    CHECK(sd == 1.0);
    CHECK(scaled == a);

    const SparseCoo empty{2, 2, {}, {}, {}};
    CHECK(scale_by_std(empty).second == 1.0);
}

TEST_CASE("counter rng is reproducible and well spread") {
    // First outputs of the reference splitmix64 stream for seed 0.
    CHECK(bits_at(0, 0) == 0xe220a8397b1dcdafULL);

    Rng r(7);
    const auto x0 = r.next_bits();
    CHECK(x0 == bits_at(7, 0));
    CHECK(r.next_bits() == bits_at(7, 1));

    double mean = 0.0;
    for (std::uint64_t i = 0; i < 10000; ++i) {
        const double u = uniform_at(99, i);
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        mean += u;
    }
    mean /= 10000.0;
    CHECK(std::abs(mean - 0.5) < 0.01);

    CHECK(derive_seed(1, 2) != derive_seed(1, 3));
    CHECK(derive_seed(1, 2) != derive_seed(2, 2));
    CHECK(derive_seed(1, 2, 3) == derive_seed(derive_seed(1, 2), 3));
}
