/*==============================================================================
 *  ordering.hpp
 *
 *  Minimum-degree fill-reducing ordering on the quotient graph. Degrees are
 *  exact external degrees (no approximation, no supernode detection, no
 *  multiple elimination). Ties go to the lowest original index, so the
 *  ordering is a pure function of the pattern.
 *
 *============================================================================*/
#pragma once

#include <set>
#include <utility>
#include <vector>

#include "sparse.hpp"

namespace nullflow {

/// perm[k] is the original index eliminated k-th; inverse gives the position.
inline std::vector<Index> invert_permutation(std::span<const Index> perm)
{
    std::vector<Index> pinv(perm.size(), -1);
    for (std::size_t k = 0; k < perm.size(); ++k) {
        if (perm[k] < 0 || perm[k] >= static_cast<Index>(perm.size()) || pinv[perm[k]] != -1) {
            throw Error(Errc::InvalidValue, "not a permutation");
        }
        pinv[perm[k]] = static_cast<Index>(k);
    }
    return pinv;
}

inline std::vector<Index> identity_permutation(Index n)
{
    std::vector<Index> p(static_cast<std::size_t>(n));
    std::iota(p.begin(), p.end(), Index{0});
    return p;
}

/// Off-diagonal adjacency of a square pattern, symmetrized.
inline std::vector<std::vector<Index>> symmetric_adjacency(const CscMatrix& pattern)
{
    if (pattern.rows() != pattern.cols()) {
        throw Error(Errc::DimensionMismatch, "ordering needs a square pattern");
    }
    const Index n = pattern.cols();
    std::vector<std::vector<Index>> adj(static_cast<std::size_t>(n));
    for (Index j = 0; j < n; ++j) {
        for (Index i : pattern.col_rows(j)) {
            if (i == j) continue;
            adj[i].push_back(j);
            adj[j].push_back(i);
        }
    }
    for (auto& a : adj) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    return adj;
}

inline std::vector<Index> minimum_degree_order(const CscMatrix& pattern)
{
    const Index n = pattern.cols();
    auto adj = symmetric_adjacency(pattern);

    std::vector<std::vector<Index>> var_elems(static_cast<std::size_t>(n));
    std::vector<std::vector<Index>> elem_vars(static_cast<std::size_t>(n));
    std::vector<char> elem_alive(static_cast<std::size_t>(n), 0);
    std::vector<char> eliminated(static_cast<std::size_t>(n), 0);
    std::vector<Index> degree(static_cast<std::size_t>(n));
    std::vector<Index> mark(static_cast<std::size_t>(n), -1);
    std::vector<Index> seen(static_cast<std::size_t>(n), -1);
    Index stamp = 0;
    Index seen_stamp = 0;

    std::set<std::pair<Index, Index>> queue;
    for (Index i = 0; i < n; ++i) {
        degree[i] = static_cast<Index>(adj[i].size());
        queue.emplace(degree[i], i);
    }

    std::vector<Index> order;
    order.reserve(static_cast<std::size_t>(n));
    std::vector<Index> reach;

    while (!queue.empty()) {
        const Index p = queue.begin()->second;
        queue.erase(queue.begin());
        order.push_back(p);
        eliminated[p] = 1;

        // New element p: its variables are p's uneliminated neighbours in the
        // quotient graph. Elements adjacent to p are absorbed.
        ++stamp;
        reach.clear();
        for (Index v : adj[p]) {
            if (!eliminated[v] && mark[v] != stamp) {
                mark[v] = stamp;
                reach.push_back(v);
            }
        }
        for (Index e : var_elems[p]) {
            if (!elem_alive[e]) continue;
            for (Index v : elem_vars[e]) {
                if (!eliminated[v] && mark[v] != stamp) {
                    mark[v] = stamp;
                    reach.push_back(v);
                }
            }
            elem_alive[e] = 0;
            elem_vars[e].clear();
        }
        std::sort(reach.begin(), reach.end());
        elem_vars[p] = reach;
        elem_alive[p] = 1;
        adj[p].clear();
        var_elems[p].clear();

        for (Index v : reach) {
            auto& el = var_elems[v];
            std::erase_if(el, [&](Index e) { return !elem_alive[e]; });
            el.push_back(p);
            // Variable-variable edges inside the new element are implied by it.
            std::erase_if(adj[v], [&](Index u) { return eliminated[u] || mark[u] == stamp; });
        }

        for (Index v : reach) {
            ++seen_stamp;
            seen[v] = seen_stamp;
            Index d = 0;
            for (Index u : adj[v]) {
                if (seen[u] != seen_stamp) {
                    seen[u] = seen_stamp;
                    ++d;
                }
            }
            for (Index e : var_elems[v]) {
                for (Index u : elem_vars[e]) {
                    if (!eliminated[u] && seen[u] != seen_stamp) {
                        seen[u] = seen_stamp;
                        ++d;
                    }
                }
            }
            if (d != degree[v]) {
                queue.erase({degree[v], v});
                degree[v] = d;
                queue.emplace(d, v);
            }
        }
    }
    return order;
}

}  // namespace nullflow
