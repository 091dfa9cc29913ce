/*==============================================================================
 *  cholesky.hpp
 *
 *  Two-phase sparse Cholesky, P·A·Pᵀ = L·Lᵀ.
 *
 *  The symbolic phase fixes everything that depends only on the pattern: the
 *  permutation, the elimination tree, the pattern of L and, for every row k,
 *  the row structure of L(k,:) in the topological order the up-looking
 *  numeric kernel consumes. The numeric phase then does only arithmetic, so a
 *  SymbolicFactor can be shared by every matrix with the same pattern.
 *
 *============================================================================*/
#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "ordering.hpp"
#include "sparse.hpp"

namespace nullflow {

class SymbolicFactor {
public:
    Index size() const noexcept { return n_; }
    std::span<const Index> perm() const noexcept { return perm_; }
    std::span<const Index> pinv() const noexcept { return pinv_; }
    std::span<const Index> etree() const noexcept { return parent_; }
    std::span<const Index> l_col_ptr() const noexcept { return l_col_ptr_; }
    std::span<const Index> l_row_idx() const noexcept { return l_row_idx_; }
    Index nnz_l() const noexcept { return l_col_ptr_.back(); }

    /// Lower-triangle pattern of A (original ordering) this factor was built for.
    std::span<const Index> a_col_ptr() const noexcept { return a_col_ptr_; }
    std::span<const Index> a_row_idx() const noexcept { return a_row_idx_; }

    friend SymbolicFactor symbolic_cholesky(const CscMatrix& pattern, std::vector<Index> perm);
    friend class NumericFactor;

private:
    Index n_ = 0;
    std::vector<Index> perm_, pinv_, parent_;
    std::vector<Index> a_col_ptr_, a_row_idx_;
    // Upper triangle of C = P·A·Pᵀ, and where each stored A entry lands in it.
    std::vector<Index> c_col_ptr_, c_row_idx_, a_to_c_;
    std::vector<Index> l_col_ptr_, l_row_idx_;
    std::vector<Index> reach_ptr_, reach_idx_;
};

namespace detail {

// Lower triangle (i >= j) of a square matrix regardless of storage mode.
inline void lower_entries(const CscMatrix& A, std::vector<Index>& cp, std::vector<Index>& ri,
                          std::vector<Index>* src = nullptr)
{
    const Index n = A.cols();
    cp.assign(static_cast<std::size_t>(n) + 1, 0);
    ri.clear();
    if (src) src->clear();
    for (Index j = 0; j < n; ++j) {
        for (Index p = A.col_ptr()[j]; p < A.col_ptr()[j + 1]; ++p) {
            Index i = A.row_idx()[p];
            if (i < j) continue;
            ri.push_back(i);
            if (src) src->push_back(p);
        }
        cp[j + 1] = static_cast<Index>(ri.size());
    }
}

// Elimination tree of a matrix whose upper triangle is given column-wise.
inline std::vector<Index> etree_upper(Index n, std::span<const Index> cp, std::span<const Index> ri)
{
    std::vector<Index> parent(static_cast<std::size_t>(n), -1);
    std::vector<Index> ancestor(static_cast<std::size_t>(n), -1);
    for (Index k = 0; k < n; ++k) {
        for (Index p = cp[k]; p < cp[k + 1]; ++p) {
            Index i = ri[p];
            while (i != -1 && i < k) {
                Index inext = ancestor[i];
                ancestor[i] = k;  // path compression
                if (inext == -1) parent[i] = k;
                i = inext;
            }
        }
    }
    return parent;
}

}  // namespace detail

/// Symbolic analysis for a square symmetric pattern under a given ordering.
/// Only the lower triangle of `pattern` is read.
inline SymbolicFactor symbolic_cholesky(const CscMatrix& pattern, std::vector<Index> perm)
{
    if (pattern.rows() != pattern.cols()) {
        throw Error(Errc::DimensionMismatch, "Cholesky needs a square matrix");
    }
    const Index n = pattern.cols();
    if (static_cast<Index>(perm.size()) != n) {
        throw Error(Errc::DimensionMismatch, "permutation length");
    }
    SymbolicFactor S;
    S.n_ = n;
    S.pinv_ = invert_permutation(perm);
    S.perm_ = std::move(perm);
    detail::lower_entries(pattern, S.a_col_ptr_, S.a_row_idx_);

    // Column counts of the upper triangle of C; entry (i,j), i>=j, of A maps
    // to (min, max) of (pinv[i], pinv[j]).
    const Index anz = S.a_col_ptr_.back();
    std::vector<Index> cnt(static_cast<std::size_t>(n) + 1, 0);
    for (Index j = 0; j < n; ++j) {
        for (Index p = S.a_col_ptr_[j]; p < S.a_col_ptr_[j + 1]; ++p) {
            Index a = S.pinv_[S.a_row_idx_[p]], b = S.pinv_[j];
            ++cnt[std::max(a, b) + 1];
        }
    }
    S.c_col_ptr_.assign(static_cast<std::size_t>(n) + 1, 0);
    std::partial_sum(cnt.begin(), cnt.end(), S.c_col_ptr_.begin());
    // Bucket by column, then sort rows inside each column, tracking the source.
    std::vector<std::pair<Index, Index>> slot(static_cast<std::size_t>(anz));
    {
        std::vector<Index> next(S.c_col_ptr_.begin(), S.c_col_ptr_.end() - 1);
        for (Index j = 0; j < n; ++j) {
            for (Index p = S.a_col_ptr_[j]; p < S.a_col_ptr_[j + 1]; ++p) {
                Index a = S.pinv_[S.a_row_idx_[p]], b = S.pinv_[j];
                slot[next[std::max(a, b)]++] = {std::min(a, b), p};
            }
        }
    }
    S.c_row_idx_.resize(static_cast<std::size_t>(anz));
    S.a_to_c_.resize(static_cast<std::size_t>(anz));
    for (Index k = 0; k < n; ++k) {
        std::sort(slot.begin() + S.c_col_ptr_[k], slot.begin() + S.c_col_ptr_[k + 1]);
        for (Index q = S.c_col_ptr_[k]; q < S.c_col_ptr_[k + 1]; ++q) {
            S.c_row_idx_[q] = slot[q].first;
            S.a_to_c_[slot[q].second] = q;
        }
    }

    S.parent_ = detail::etree_upper(n, S.c_col_ptr_, S.c_row_idx_);

    // Row structure of L(k,:) via etree reach, kept in topological order.
    std::vector<Index> mark(static_cast<std::size_t>(n), -1);
    std::vector<Index> stack(static_cast<std::size_t>(n));
    std::vector<Index> colcount(static_cast<std::size_t>(n), 1);  // diagonal
    S.reach_ptr_.assign(1, 0);
    for (Index k = 0; k < n; ++k) {
        Index top = n;
        mark[k] = k;
        for (Index p = S.c_col_ptr_[k]; p < S.c_col_ptr_[k + 1]; ++p) {
            Index i = S.c_row_idx_[p];
            if (i > k) continue;
            Index len = 0;
            for (; mark[i] != k; i = S.parent_[i]) {
                stack[len++] = i;
                mark[i] = k;
            }
            while (len > 0) stack[--top] = stack[--len];
        }
        for (Index t = top; t < n; ++t) {
            S.reach_idx_.push_back(stack[t]);
            ++colcount[stack[t]];
        }
        S.reach_ptr_.push_back(static_cast<Index>(S.reach_idx_.size()));
    }

    S.l_col_ptr_.assign(static_cast<std::size_t>(n) + 1, 0);
    for (Index j = 0; j < n; ++j) S.l_col_ptr_[j + 1] = S.l_col_ptr_[j] + colcount[j];
    S.l_row_idx_.resize(static_cast<std::size_t>(S.l_col_ptr_.back()));
    std::vector<Index> cursor(S.l_col_ptr_.begin(), S.l_col_ptr_.end() - 1);
    for (Index k = 0; k < n; ++k) {
        S.l_row_idx_[cursor[k]++] = k;
        for (Index t = S.reach_ptr_[k]; t < S.reach_ptr_[k + 1]; ++t) {
            S.l_row_idx_[cursor[S.reach_idx_[t]]++] = k;
        }
    }
    return S;
}

/// Symbolic analysis with the built-in minimum-degree ordering.
inline SymbolicFactor symbolic_cholesky(const CscMatrix& pattern)
{
    return symbolic_cholesky(pattern, minimum_degree_order(pattern));
}

/// nnz(L) for `pattern` under `perm`.
inline Index cholesky_fill(const CscMatrix& pattern, std::span<const Index> perm)
{
    return symbolic_cholesky(pattern, std::vector<Index>(perm.begin(), perm.end())).nnz_l();
}

class NumericFactor {
public:
    NumericFactor(std::shared_ptr<const SymbolicFactor> symbolic, const CscMatrix& A)
        : symbolic_(std::move(symbolic))
    {
        refactor(A);
    }

    const SymbolicFactor& symbolic() const noexcept { return *symbolic_; }
    std::span<const double> l_values() const noexcept { return l_values_; }

    /// L as a lower-triangular CSC matrix in permuted ordering.
    CscMatrix L() const
    {
        const auto& S = *symbolic_;
        return CscMatrix(S.n_, S.n_, S.l_col_ptr_, S.l_row_idx_, l_values_);
    }

    /// Numeric phase only; the pattern of A must be contained in the pattern
    /// the symbolic factor was built for.
    void refactor(const CscMatrix& A)
    {
        const auto& S = *symbolic_;
        const Index n = S.n_;
        if (A.rows() != n || A.cols() != n) {
            throw Error(Errc::DimensionMismatch, "matrix size differs from symbolic factor");
        }
        c_values_.assign(S.c_row_idx_.size(), 0.0);
        scatter_into_c(A);

        l_values_.assign(S.l_row_idx_.size(), 0.0);
        x_.assign(static_cast<std::size_t>(n), 0.0);
        cursor_.assign(S.l_col_ptr_.begin(), S.l_col_ptr_.end() - 1);
        for (Index k = 0; k < n; ++k) {
            for (Index p = S.c_col_ptr_[k]; p < S.c_col_ptr_[k + 1]; ++p) {
                x_[S.c_row_idx_[p]] = c_values_[p];
            }
            double d = x_[k];
            x_[k] = 0.0;
            for (Index t = S.reach_ptr_[k]; t < S.reach_ptr_[k + 1]; ++t) {
                const Index i = S.reach_idx_[t];
                const double lki = x_[i] / l_values_[S.l_col_ptr_[i]];
                x_[i] = 0.0;
                for (Index p = S.l_col_ptr_[i] + 1; p < cursor_[i]; ++p) {
                    x_[S.l_row_idx_[p]] -= l_values_[p] * lki;
                }
                d -= lki * lki;
                l_values_[cursor_[i]++] = lki;
            }
            if (!(d > 0.0)) {
                throw Error(Errc::NotPositiveDefinite,
                            "nonpositive pivot at permuted column " + std::to_string(k));
            }
            l_values_[cursor_[k]++] = std::sqrt(d);
        }
    }

    /// Solves A·x = b through the permuted factor.
    std::vector<double> solve(std::span<const double> b) const
    {
        std::vector<double> x(b.size());
        solve_into(b, x);
        return x;
    }

    void solve_into(std::span<const double> b, std::span<double> x) const
    {
        const auto& S = *symbolic_;
        const Index n = S.n_;
        if (static_cast<Index>(b.size()) != n || static_cast<Index>(x.size()) != n) {
            throw Error(Errc::DimensionMismatch, "right-hand side length");
        }
        std::vector<double> y(static_cast<std::size_t>(n));
        for (Index k = 0; k < n; ++k) y[k] = b[S.perm_[k]];
        for (Index j = 0; j < n; ++j) {
            y[j] /= l_values_[S.l_col_ptr_[j]];
            for (Index p = S.l_col_ptr_[j] + 1; p < S.l_col_ptr_[j + 1]; ++p) {
                y[S.l_row_idx_[p]] -= l_values_[p] * y[j];
            }
        }
        for (Index j = n - 1; j >= 0; --j) {
            for (Index p = S.l_col_ptr_[j] + 1; p < S.l_col_ptr_[j + 1]; ++p) {
                y[j] -= l_values_[p] * y[S.l_row_idx_[p]];
            }
            y[j] /= l_values_[S.l_col_ptr_[j]];
        }
        for (Index k = 0; k < n; ++k) x[S.perm_[k]] = y[k];
    }

private:
    void scatter_into_c(const CscMatrix& A)
    {
        const auto& S = *symbolic_;
        detail::lower_entries(A, lower_cp_, lower_ri_, &lower_src_);
        const bool same = lower_cp_ == S.a_col_ptr_ && lower_ri_ == S.a_row_idx_;
        for (Index j = 0; j < S.n_; ++j) {
            for (Index q = lower_cp_[j]; q < lower_cp_[j + 1]; ++q) {
                Index slot = q;
                if (!same) {
                    auto first = S.a_row_idx_.begin() + S.a_col_ptr_[j];
                    auto last = S.a_row_idx_.begin() + S.a_col_ptr_[j + 1];
                    auto it = std::lower_bound(first, last, lower_ri_[q]);
                    if (it == last || *it != lower_ri_[q]) {
                        throw Error(Errc::PatternMismatch,
                                    "matrix entry outside the analysed pattern");
                    }
                    slot = static_cast<Index>(it - S.a_row_idx_.begin());
                }
                c_values_[S.a_to_c_[slot]] += A.values()[lower_src_[q]];
            }
        }
    }

    std::shared_ptr<const SymbolicFactor> symbolic_;
    std::vector<double> l_values_;
    std::vector<double> c_values_;
    std::vector<double> x_;
    std::vector<Index> cursor_;
    std::vector<Index> lower_cp_, lower_ri_, lower_src_;
};

inline NumericFactor numeric_cholesky(const CscMatrix& A, std::shared_ptr<const SymbolicFactor> symbolic)
{
    return NumericFactor(std::move(symbolic), A);
}

inline std::vector<double> solve_factored(const NumericFactor& factor, std::span<const double> b)
{
    return factor.solve(b);
}

}  // namespace nullflow
