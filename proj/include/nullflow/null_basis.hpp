/*==============================================================================
 *  null_basis.hpp
 *
 *  Fundamental null basis Z of A12ᵀ built by RCTM-style pivoting: all
 *  fixed-head nodes are merged into one ground node, then the lowest-index
 *  pipe with exactly one unresolved junction endpoint is repeatedly taken as
 *  a tree edge and that junction resolved. The pipes left over are chords.
 *  Column k of Z is the fundamental cycle closed by the k-th chord (ascending
 *  pipe index): +1 on the chord, ±1 on the tree path according to whether the
 *  path runs along or against each pipe's reference direction.
 *
 *============================================================================*/
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <queue>
#include <vector>

#include "cholesky.hpp"
#include "gram.hpp"
#include "network.hpp"

namespace nullflow {

struct NullBasis {
    Index n_pipes = 0;
    Index n_loops = 0;
    // Z in compressed columns with entries in {−1, +1}.
    std::vector<Index> col_ptr{0};
    std::vector<Index> row_idx;
    std::vector<std::int8_t> values;

    std::vector<Index> E2;           // sorted nonzero rows of Z
    std::vector<Index> tree_edges;   // in pivot order
    std::vector<Index> chord_edges;  // ascending; chord_edges[k] closes column k
    std::vector<Index> row_perm;     // tree edges in pivot order, then chords
    std::vector<Index> col_perm;     // junctions in pivot order

    Index nnz() const noexcept { return col_ptr.back(); }

    CscMatrix Z_real() const
    {
        std::vector<double> v(values.begin(), values.end());
        return CscMatrix(n_pipes, n_loops, col_ptr, row_idx, std::move(v));
    }

    /// y = Z·v
    std::vector<double> multiply(std::span<const double> v) const
    {
        std::vector<double> y(static_cast<std::size_t>(n_pipes), 0.0);
        for (Index k = 0; k < n_loops; ++k) {
            for (Index p = col_ptr[k]; p < col_ptr[k + 1]; ++p) y[row_idx[p]] += values[p] * v[k];
        }
        return y;
    }

    /// y = Zᵀ·x
    std::vector<double> multiply_transposed(std::span<const double> x) const
    {
        std::vector<double> y(static_cast<std::size_t>(n_loops), 0.0);
        for (Index k = 0; k < n_loops; ++k) {
            double s = 0.0;
            for (Index p = col_ptr[k]; p < col_ptr[k + 1]; ++p) s += values[p] * x[row_idx[p]];
            y[k] = s;
        }
        return y;
    }
};

inline NullBasis build_fundamental_basis(const CscMatrix& A12, const CscMatrix& A10)
{
    const Index np = A12.rows();
    const Index nn = A12.cols();
    if (A10.rows() != np) throw Error(Errc::DimensionMismatch, "A12 and A10 row counts differ");
    const Index ground = nn;

    // Endpoints in the ground-merged graph: from = −1 entry, to = +1 entry.
    std::vector<Index> from(static_cast<std::size_t>(np), ground), to(static_cast<std::size_t>(np), ground);
    std::vector<std::vector<Index>> incident(static_cast<std::size_t>(nn));
    for (Index i = 0; i < nn; ++i) {
        auto rows = A12.col_rows(i);
        auto vals = A12.col_values(i);
        for (std::size_t k = 0; k < rows.size(); ++k) {
            (vals[k] > 0 ? to : from)[rows[k]] = i;
            incident[i].push_back(rows[k]);
        }
    }

    std::vector<int> open(static_cast<std::size_t>(np), 0);
    for (Index j = 0; j < np; ++j) {
        open[j] = (from[j] != ground) + (to[j] != ground);
    }
    std::priority_queue<Index, std::vector<Index>, std::greater<>> ready;
    for (Index j = 0; j < np; ++j) {
        if (open[j] == 1) ready.push(j);
    }

    std::vector<char> resolved(static_cast<std::size_t>(nn) + 1, 0);
    resolved[ground] = 1;
    std::vector<Index> parent_edge(static_cast<std::size_t>(nn) + 1, -1);
    std::vector<Index> depth(static_cast<std::size_t>(nn) + 1, 0);
    std::vector<char> is_tree(static_cast<std::size_t>(np), 0);

    NullBasis B;
    B.n_pipes = np;
    while (!ready.empty()) {
        const Index j = ready.top();
        ready.pop();
        if (open[j] != 1) continue;
        const Index v = resolved[from[j]] ? to[j] : from[j];
        const Index u = resolved[from[j]] ? from[j] : to[j];
        resolved[v] = 1;
        parent_edge[v] = j;
        depth[v] = depth[u] + 1;
        is_tree[j] = 1;
        B.tree_edges.push_back(j);
        B.col_perm.push_back(v);
        for (Index e : incident[v]) {
            if (--open[e] == 1) ready.push(e);
        }
    }
    if (static_cast<Index>(B.tree_edges.size()) != nn) {
        throw Error(Errc::RankDeficient, "spanning tree does not reach every junction");
    }

    for (Index j = 0; j < np; ++j) {
        if (!is_tree[j]) B.chord_edges.push_back(j);
    }
    B.n_loops = static_cast<Index>(B.chord_edges.size());
    B.row_perm = B.tree_edges;
    B.row_perm.insert(B.row_perm.end(), B.chord_edges.begin(), B.chord_edges.end());

    auto parent_of = [&](Index x) {
        const Index e = parent_edge[x];
        return from[e] == x ? to[e] : from[e];
    };

    std::vector<std::pair<Index, std::int8_t>> col;
    std::vector<char> in_E2(static_cast<std::size_t>(np), 0);
    for (Index c : B.chord_edges) {
        col.clear();
        col.emplace_back(c, std::int8_t{1});
        // Cycle: chord from→to, then the tree path from `to` back to `from`.
        Index b = to[c], a = from[c];
        std::vector<std::pair<Index, std::int8_t>> tail;  // a-side, reversed later
        while (b != a) {
            if (depth[b] >= depth[a]) {
                const Index e = parent_edge[b];
                col.emplace_back(e, from[e] == b ? 1 : -1);  // walking b → parent
                b = parent_of(b);
            } else {
                const Index e = parent_edge[a];
                tail.emplace_back(e, to[e] == a ? 1 : -1);  // walking parent → a
                a = parent_of(a);
            }
        }
        col.insert(col.end(), tail.begin(), tail.end());
        std::sort(col.begin(), col.end());
        for (auto [r, s] : col) {
            B.row_idx.push_back(r);
            B.values.push_back(s);
            in_E2[r] = 1;
        }
        B.col_ptr.push_back(static_cast<Index>(B.row_idx.size()));
    }
    for (Index j = 0; j < np; ++j) {
        if (in_E2[j]) B.E2.push_back(j);
    }
    return B;
}

inline NullBasis build_fundamental_basis(const Network& net)
{
    return build_fundamental_basis(net.A12(), net.A10());
}

/*------------------------------------------------------------------------------
 *  ZᵀF̃Z assembly
 *----------------------------------------------------------------------------*/

/// Full assembly Σ_{i∈E₂} F_i z_i z_iᵀ on the plan's structural pattern.
inline CscMatrix assemble_ZtFZ(const WeightedGram& plan, std::span<const double> F)
{
    return plan.assemble(F);
}

/// prev + Σ_{i∈delta} (F_i − F_prev_i) z_i z_iᵀ; prev must carry the full pattern.
inline CscMatrix assemble_ZtFZ(const WeightedGram& plan, std::span<const double> F,
                               const CscMatrix& prev, std::span<const double> F_prev,
                               std::span<const Index> delta)
{
    CscMatrix X = prev;
    plan.update(X, F, F_prev, delta);
    return X;
}

/*------------------------------------------------------------------------------
 *  Diagnostics
 *----------------------------------------------------------------------------*/

struct BasisDiagnostics {
    Index n_l = 0;
    double cond_ZtZ = 0.0;
    double cond_A12tA12 = 0.0;
    double nnz_ratio = 0.0;      // % nnz(ZᵀFZ) / nnz(A12ᵀFA12), both triangles
    double loop_fraction = 0.0;  // % |E2| / n_p
    Index nnz_ZtFZ = 0;
    Index nnz_A12tFA12 = 0;
};

namespace detail {

inline Index full_nnz(const CscMatrix& lower)
{
    Index n = 0;
    for (Index j = 0; j < lower.cols(); ++j) {
        for (Index i : lower.col_rows(j)) n += (i == j) ? 1 : 2;
    }
    return n;
}

inline double normalize(std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v) s += x * x;
    s = std::sqrt(s);
    for (double& x : v) x /= s;
    return s;
}

/// λmax/λmin of an SPD matrix by power and inverse iteration.
inline double condition_estimate(const CscMatrix& A, int iterations = 20, double tol = 1e-6)
{
    const Index n = A.cols();
    auto start = [n] {
        std::vector<double> v(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i) v[i] = 1.0 + static_cast<double>(i) / static_cast<double>(n);
        normalize(v);
        return v;
    };
    auto iterate = [&](auto&& apply) {
        auto v = start();
        double lambda = 0.0;
        for (int k = 0; k < iterations; ++k) {
            auto w = apply(v);
            const double next = normalize(w);
            v = std::move(w);
            const bool done = k > 0 && std::abs(next - lambda) <= tol * next;
            lambda = next;
            if (done) break;
        }
        return lambda;
    };
    const double lmax = iterate([&](const std::vector<double>& v) { return A.multiply(v); });
    auto fac = numeric_cholesky(A, std::make_shared<SymbolicFactor>(symbolic_cholesky(A)));
    const double inv_lmin = iterate([&](const std::vector<double>& v) { return fac.solve(v); });
    return lmax * inv_lmin;
}

}  // namespace detail

inline BasisDiagnostics diagnostics(const NullBasis& basis, const CscMatrix& A12,
                                    std::span<const double> F)
{
    BasisDiagnostics d;
    d.n_l = basis.n_loops;
    if (basis.n_loops == 0) return d;
    if (static_cast<Index>(F.size()) != basis.n_pipes) {
        throw Error(Errc::DimensionMismatch, "F length must equal n_p");
    }
    const WeightedGram zplan(basis.Z_real());
    const WeightedGram aplan(A12);
    d.nnz_ZtFZ = detail::full_nnz(zplan.pattern());
    d.nnz_A12tFA12 = detail::full_nnz(aplan.pattern());
    d.nnz_ratio = 100.0 * static_cast<double>(d.nnz_ZtFZ) / static_cast<double>(d.nnz_A12tFA12);
    d.loop_fraction = 100.0 * static_cast<double>(basis.E2.size()) / static_cast<double>(basis.n_pipes);

    const std::vector<double> ones(static_cast<std::size_t>(basis.n_pipes), 1.0);
    d.cond_ZtZ = detail::condition_estimate(zplan.assemble(ones));
    d.cond_A12tA12 = detail::condition_estimate(aplan.assemble(ones));
    return d;
}

}  // namespace nullflow
