#include <catch_amalgamated.hpp>

#include <cmath>
#include <memory>
#include <random>

#include <nullflow/cholesky.hpp>
#include <nullflow/ordering.hpp>

#include "oracles.hpp"

using namespace nullflow;

namespace {

CscMatrix sym(Index n, const std::vector<double>& dense)
{
    return CscMatrix::from_dense(n, n, dense, Symmetry::SymmetricLowerStored);
}

std::shared_ptr<const SymbolicFactor> analyse(const CscMatrix& A, std::vector<Index> perm)
{
    return std::make_shared<const SymbolicFactor>(symbolic_cholesky(A, std::move(perm)));
}

CscMatrix arrow(Index n)
{
    std::vector<double> d(static_cast<std::size_t>(n * n), 0.0);
    for (Index i = 0; i < n; ++i) {
        d[i * n + i] = static_cast<double>(n);
        if (i > 0) d[i * n] = d[i] = 1.0;
    }
    return sym(n, d);
}

}  // namespace

TEST_CASE("minimum degree returns a permutation", "[ordering]")
{
    std::mt19937_64 rng(3);
    for (int t = 0; t < 30; ++t) {
        const std::size_t n = 1 + rng() % 40;
        const auto A = sym(static_cast<Index>(n), oracle::random_spd(rng, n, 0.1));
        auto p = minimum_degree_order(A);
        REQUIRE(p.size() == n);
        const auto pinv = invert_permutation(p);
        for (std::size_t k = 0; k < n; ++k) CHECK(p[pinv[k]] == static_cast<Index>(k));
    }
}

TEST_CASE("fill counts on structured patterns", "[ordering][cholesky]")
{
    SECTION("identity pattern")
    {
        const auto I = CscMatrix::identity(6);
        CHECK(cholesky_fill(I, minimum_degree_order(I)) == 6);
    }
    SECTION("arrow matrix: natural order fills, minimum degree puts the hub last")
    {
        const auto A = arrow(5);
        CHECK(cholesky_fill(A, identity_permutation(5)) == 15);
        const auto p = minimum_degree_order(A);
        // Hub and last leaf tie at degree 1 once three leaves are gone.
        const auto pos = invert_permutation(p);
        CHECK(pos[0] >= 3);
        CHECK(cholesky_fill(A, p) == 9);
    }
    SECTION("tridiagonal n = 10")
    {
        std::vector<double> d(100, 0.0);
        for (int i = 0; i < 10; ++i) {
            d[i * 10 + i] = 4.0;
            if (i > 0) d[i * 10 + i - 1] = d[(i - 1) * 10 + i] = -1.0;
        }
        const auto T = sym(10, d);
        CHECK(cholesky_fill(T, minimum_degree_order(T)) == 19);
    }
    SECTION("2x2 full pattern")
    {
        const auto A = sym(2, {4.0, 2.0, 2.0, 3.0});
        CHECK(cholesky_fill(A, identity_permutation(2)) == 3);
    }
}

TEST_CASE("hand-worked factorizations", "[cholesky]")
{
    SECTION("identity")
    {
        const auto I = CscMatrix::identity(3);
        const NumericFactor f(analyse(I, identity_permutation(3)), I);
        CHECK(f.L().to_dense() == I.to_dense());
        CHECK(f.solve(std::vector<double>{1.0, -2.0, 3.0}) == std::vector<double>{1.0, -2.0, 3.0});
    }
    SECTION("[[4,2],[2,3]]")
    {
        const auto A = sym(2, {4.0, 2.0, 2.0, 3.0});
        const NumericFactor f(analyse(A, identity_permutation(2)), A);
        const auto L = f.L().to_dense();
        CHECK(L[0] == 2.0);
        CHECK(L[1] == 0.0);
        CHECK(L[2] == 1.0);
        CHECK(L[3] == Catch::Approx(std::sqrt(2.0)).epsilon(1e-15));
        const auto x = f.solve(std::vector<double>{8.0, 7.0});
        CHECK_THAT(x[0], Catch::Matchers::WithinAbs(1.25, 1e-15));
        CHECK_THAT(x[1], Catch::Matchers::WithinAbs(1.5, 1e-15));
    }
    SECTION("indefinite matrix")
    {
        const auto A = sym(2, {1.0, 2.0, 2.0, 1.0});
        try {
            NumericFactor f(analyse(A, identity_permutation(2)), A);
            FAIL("expected NotPositiveDefinite");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::NotPositiveDefinite);
        }
    }
}

TEST_CASE("sparse factor reconstructs and solves like the dense oracle", "[cholesky][property]")
{
    std::mt19937_64 rng(1234);
    for (int t = 0; t < 60; ++t) {
        const std::size_t n = 1 + rng() % 40;
        const auto Ad = oracle::random_spd(rng, n, 0.15);
        const auto A = sym(static_cast<Index>(n), Ad);
        const auto S = std::make_shared<const SymbolicFactor>(symbolic_cholesky(A));
        const NumericFactor f(S, A);

        const auto L = f.L().to_dense();
        const auto p = S->perm();
        double rec = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < n; ++k) s += L[i * n + k] * L[j * n + k];
                rec = std::max(rec, std::abs(Ad[p[i] * n + p[j]] - s));
            }
        CHECK(rec <= 1e-10 * A.norm_inf());

        // Without reordering the factor matches the dense Cholesky entry by entry.
        const NumericFactor natural(analyse(A, identity_permutation(static_cast<Index>(n))), A);
        const auto Ln = natural.L().to_dense();
        const auto Lo = oracle::cholesky(Ad, n);
        for (std::size_t k = 0; k < n * n; ++k) CHECK(std::abs(Ln[k] - Lo[k]) <= 1e-12 * (1.0 + std::abs(Lo[k])));

        std::vector<double> b(n);
        for (auto& v : b) v = static_cast<double>(rng() % 200) / 100.0 - 1.0;
        const auto x = f.solve(b);
        const auto xr = oracle::lu_solve(Ad, b);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(x[i] - xr[i]) <= 1e-9);
    }
}

TEST_CASE("refactor reuses the symbolic analysis bit for bit", "[cholesky]")
{
    std::mt19937_64 rng(77);
    const std::size_t n = 30;
    const auto Ad = oracle::random_spd(rng, n, 0.1);
    const auto A = sym(static_cast<Index>(n), Ad);
    auto Ad2 = Ad;
    for (std::size_t i = 0; i < n; ++i) Ad2[i * n + i] += 0.75;
    const auto A2 = sym(static_cast<Index>(n), Ad2);
    REQUIRE(A2.same_pattern(A));

    const auto S = std::make_shared<const SymbolicFactor>(symbolic_cholesky(A));
    NumericFactor reused(S, A);
    reused.refactor(A2);
    const NumericFactor fresh(std::make_shared<const SymbolicFactor>(symbolic_cholesky(A2)), A2);
    CHECK(std::vector<double>(reused.l_values().begin(), reused.l_values().end()) ==
          std::vector<double>(fresh.l_values().begin(), fresh.l_values().end()));
    const std::vector<double> b(n, 1.0);
    CHECK(reused.solve(b) == fresh.solve(b));
}

TEST_CASE("refactor rejects entries outside the analysed pattern", "[cholesky]")
{
    const auto D = CscMatrix::identity(3);
    NumericFactor f(analyse(D, identity_permutation(3)), D);
    const auto full = sym(3, {4, 1, 1, 1, 4, 1, 1, 1, 4});
    try {
        f.refactor(full);
        FAIL("expected PatternMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::PatternMismatch);
    }
    CHECK_THROWS_AS(f.solve(std::vector<double>{1.0}), Error);
}
