#include <catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <set>

#include <nullflow/fixtures.hpp>
#include <nullflow/null_basis.hpp>

using namespace nullflow;

namespace {

// Dense Z and A12 copies, row-major.
std::vector<int> dense_Z(const NullBasis& B)
{
    std::vector<int> Z(static_cast<std::size_t>(B.n_pipes * B.n_loops), 0);
    for (Index k = 0; k < B.n_loops; ++k) {
        for (Index p = B.col_ptr[k]; p < B.col_ptr[k + 1]; ++p) Z[B.row_idx[p] * B.n_loops + k] = B.values[p];
    }
    return Z;
}

void check_null_space(const Network& net, const NullBasis& B)
{
    const auto A = net.A12().to_dense();
    const auto Z = dense_Z(B);
    const Index np = net.n_pipes(), nn = net.n_junctions(), nl = B.n_loops;
    REQUIRE(nl == np - nn);
    for (Index i = 0; i < nn; ++i) {
        for (Index k = 0; k < nl; ++k) {
            long long s = 0;
            for (Index j = 0; j < np; ++j) s += static_cast<long long>(A[j * nn + i]) * Z[j * nl + k];
            REQUIRE(s == 0);
        }
    }
    // Chord k appears with +1 in column k and nowhere else, so Z has full column rank.
    for (Index k = 0; k < nl; ++k) {
        const Index c = B.chord_edges[k];
        for (Index m = 0; m < nl; ++m) REQUIRE(Z[c * nl + m] == (m == k ? 1 : 0));
    }
    for (auto v : B.values) REQUIRE((v == 1 || v == -1));
}

// Structural nnz of XᵀX (both triangles) for a dense matrix X (rows × cols).
template <class T>
Index gram_nnz(const std::vector<T>& X, Index rows, Index cols)
{
    Index n = 0;
    for (Index a = 0; a < cols; ++a) {
        for (Index b = 0; b < cols; ++b) {
            for (Index r = 0; r < rows; ++r) {
                if (X[r * cols + a] != 0 && X[r * cols + b] != 0) {
                    ++n;
                    break;
                }
            }
        }
    }
    return n;
}

}  // namespace

TEST_CASE("tree network has an empty null space", "[null_basis]")
{
    for (const Network& net : {fixtures::single_pipe(), fixtures::random_network(9, {12, 1, 0})}) {
        const auto B = build_fundamental_basis(net);
        CHECK(B.n_loops == 0);
        CHECK(B.nnz() == 0);
        CHECK(B.E2.empty());
        CHECK(B.chord_edges.empty());
        CHECK(B.Z_real().cols() == 0);
        CHECK(B.Z_real().rows() == net.n_pipes());
        const auto d = diagnostics(B, net.A12(), std::vector<double>(static_cast<std::size_t>(net.n_pipes()), 1.0));
        CHECK(d.n_l == 0);
        CHECK(d.nnz_ratio == 0.0);
        CHECK(d.loop_fraction == 0.0);
    }
}

TEST_CASE("square loop: one column over all four pipes", "[null_basis]")
{
    const Network net = fixtures::square_loop();
    REQUIRE(net.n_pipes() == 4);
    REQUIRE(net.n_junctions() == 3);
    const auto B = build_fundamental_basis(net);
    CHECK(B.n_loops == 1);
    CHECK(B.nnz() == 4);
    CHECK(B.E2 == std::vector<Index>{0, 1, 2, 3});
    check_null_space(net, B);

    const auto d = diagnostics(B, net.A12(), std::vector<double>(4, 1.0));
    CHECK(d.n_l == 1);
    CHECK(d.nnz_ZtFZ == 1);
    CHECK(d.cond_ZtZ == Catch::Approx(1.0));
    CHECK(d.loop_fraction == 100.0);

    const auto ZtZ = WeightedGram(B.Z_real()).assemble(std::vector<double>(4, 1.0));
    CHECK(ZtZ.to_dense() == std::vector<double>{4.0});
}

TEST_CASE("parallel pair: a two-pipe cycle", "[null_basis]")
{
    const Network net = fixtures::parallel_pair();
    const auto B = build_fundamental_basis(net);
    REQUIRE(B.n_loops == 1);
    CHECK(B.nnz() == 2);
    check_null_space(net, B);
    const auto Z = dense_Z(B);
    const Index chord = B.chord_edges[0], tree = B.tree_edges[0];
    CHECK(Z[chord] == 1);
    // Both pipes point the same way between the same nodes, so the cycle runs
    // back along the tree pipe.
    const auto& pc = net.pipes()[chord];
    const auto& pt = net.pipes()[tree];
    CHECK(Z[tree] == (pc.from == pt.from ? -1 : 1));
}

TEST_CASE("fundamental basis is a null-space basis on random networks", "[null_basis][property]")
{
    std::mt19937_64 rng(2718);
    for (int t = 0; t < 150; ++t) {
        fixtures::RandomSpec spec;
        spec.junctions = 1 + static_cast<Index>(rng() % 60);
        spec.fixed_heads = 1 + static_cast<Index>(rng() % 4);
        spec.extra_pipes = static_cast<Index>(rng() % 40);
        const Network net = fixtures::random_network(rng(), spec);
        INFO("trial " << t);
        const auto B = build_fundamental_basis(net);
        check_null_space(net, B);

        // E2 is exactly the set of nonzero rows.
        std::set<Index> rows(B.row_idx.begin(), B.row_idx.end());
        CHECK(std::vector<Index>(rows.begin(), rows.end()) == B.E2);

        // Tree edges span the junctions; chords are the remaining pipes in ascending order.
        CHECK(static_cast<Index>(B.tree_edges.size()) == net.n_junctions());
        CHECK(std::is_sorted(B.chord_edges.begin(), B.chord_edges.end()));
        CHECK(static_cast<Index>(B.row_perm.size()) == net.n_pipes());
        std::vector<Index> perm = B.row_perm;
        std::sort(perm.begin(), perm.end());
        for (Index j = 0; j < net.n_pipes(); ++j) REQUIRE(perm[j] == j);

        // Z·v and Zᵀ·x against the dense copy.
        const auto Z = dense_Z(B);
        std::vector<double> v(static_cast<std::size_t>(B.n_loops)), x(static_cast<std::size_t>(net.n_pipes()));
        for (double& e : v) e = static_cast<double>(rng() % 17) - 8.0;
        for (double& e : x) e = static_cast<double>(rng() % 17) - 8.0;
        const auto Zv = B.multiply(v);
        const auto Ztx = B.multiply_transposed(x);
        for (Index j = 0; j < net.n_pipes(); ++j) {
            double s = 0.0;
            for (Index k = 0; k < B.n_loops; ++k) s += Z[j * B.n_loops + k] * v[k];
            REQUIRE(Zv[j] == s);
        }
        for (Index k = 0; k < B.n_loops; ++k) {
            double s = 0.0;
            for (Index j = 0; j < net.n_pipes(); ++j) s += Z[j * B.n_loops + k] * x[j];
            REQUIRE(Ztx[k] == s);
        }
    }
}

TEST_CASE("disconnected incidence is rank deficient", "[null_basis]")
{
    // Junctions 1 and 2 form a cycle with no path to a fixed head.
    const CscMatrix A12 = CscMatrix::from_triplets(
        3, 3, std::vector<Triplet>{{0, 0, 1.0}, {1, 1, -1.0}, {1, 2, 1.0}, {2, 2, -1.0}, {2, 1, 1.0}});
    const CscMatrix A10 = CscMatrix::from_triplets(3, 1, std::vector<Triplet>{{0, 0, -1.0}});
    try {
        build_fundamental_basis(A12, A10);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::RankDeficient);
    }
}

TEST_CASE("grid diagnostics against a dense pattern count", "[null_basis][diagnostics]")
{
    for (auto dry : {false, true}) {
        const Network net = fixtures::grid(10, HeadlossModel::HazenWilliams, dry);
        const auto B = build_fundamental_basis(net);
        const std::vector<double> F(static_cast<std::size_t>(net.n_pipes()), 1.0);
        const auto d = diagnostics(B, net.A12(), F);

        const auto Z = dense_Z(B);
        const auto A = net.A12().to_dense();
        const Index zz = gram_nnz(Z, net.n_pipes(), B.n_loops);
        const Index aa = gram_nnz(A, net.n_pipes(), net.n_junctions());
        Index nonzero_rows = 0;
        for (Index j = 0; j < net.n_pipes(); ++j) {
            for (Index k = 0; k < B.n_loops; ++k) {
                if (Z[j * B.n_loops + k] != 0) {
                    ++nonzero_rows;
                    break;
                }
            }
        }
        CHECK(d.n_l == 81);
        CHECK(d.nnz_ZtFZ == zz);
        CHECK(d.nnz_A12tFA12 == aa);
        CHECK(d.nnz_ratio == Catch::Approx(100.0 * zz / aa).epsilon(1e-14));
        CHECK(d.loop_fraction == Catch::Approx(100.0 * nonzero_rows / net.n_pipes()).epsilon(1e-14));
        CHECK(d.cond_ZtZ >= 1.0);
        CHECK(d.cond_A12tA12 >= 1.0);
        CHECK_THROWS_AS(diagnostics(B, net.A12(), std::vector<double>(3, 1.0)), Error);
    }
}
