/*==============================================================================
 *  gram.hpp
 *
 *  Weighted Gram products X = Mᵀ·diag(w)·M = Σ_i w_i m_i m_iᵀ for a sparse
 *  matrix M with small integer entries (an incidence matrix or a null basis),
 *  where m_i is the i-th row of M.
 *
 *  The plan stores the lower-triangle pattern of X once, together with the
 *  list of (slot, coefficient) pairs each row of M contributes. The pattern
 *  never depends on w, so X always carries the full structural pattern and a
 *  single symbolic Cholesky factor serves every assembly. Rank-one updates
 *  over a subset of rows reuse the same slots.
 *
 *============================================================================*/
#pragma once

#include <span>
#include <vector>

#include "sparse.hpp"

namespace nullflow {

class WeightedGram {
public:
    WeightedGram() = default;

    explicit WeightedGram(const CscMatrix& M) : nrows_(M.rows()), ncols_(M.cols())
    {
        const CscMatrix Mt = M.transpose();  // columns of Mt are rows of M
        std::vector<Triplet> t;
        for (Index i = 0; i < nrows_; ++i) {
            auto cols = Mt.col_rows(i);
            for (std::size_t a = 0; a < cols.size(); ++a) {
                for (std::size_t b = 0; b <= a; ++b) {
                    t.push_back({cols[a], cols[b], 0.0});
                }
            }
        }
        pattern_ = CscMatrix::from_triplets(ncols_, ncols_, t, Symmetry::SymmetricLowerStored);

        contrib_ptr_.assign(static_cast<std::size_t>(nrows_) + 1, 0);
        for (Index i = 0; i < nrows_; ++i) {
            auto cols = Mt.col_rows(i);
            auto vals = Mt.col_values(i);
            for (std::size_t a = 0; a < cols.size(); ++a) {
                for (std::size_t b = 0; b <= a; ++b) {
                    contrib_slot_.push_back(slot_of(cols[a], cols[b]));
                    contrib_coef_.push_back(vals[a] * vals[b]);
                }
            }
            contrib_ptr_[i + 1] = static_cast<Index>(contrib_slot_.size());
            if (!cols.empty()) active_rows_.push_back(i);
        }
    }

    /// Rows of M with at least one nonzero; for a null basis this is E₂.
    std::span<const Index> active_rows() const noexcept { return active_rows_; }
    const CscMatrix& pattern() const noexcept { return pattern_; }
    Index rows() const noexcept { return nrows_; }
    Index size() const noexcept { return ncols_; }

    /// Σ_i w_i m_i m_iᵀ over every row of M.
    CscMatrix assemble(std::span<const double> w) const
    {
        check_weights(w);
        CscMatrix X = pattern_;
        auto xv = X.values_mut();
        std::fill(xv.begin(), xv.end(), 0.0);
        for (Index i : active_rows_) {
            const double wi = w[i];
            for (Index c = contrib_ptr_[i]; c < contrib_ptr_[i + 1]; ++c) {
                xv[contrib_slot_[c]] += wi * contrib_coef_[c];
            }
        }
        return X;
    }

    /// X += Σ_{i∈rows} (w_new_i − w_old_i) m_i m_iᵀ. X must carry this plan's pattern.
    void update(CscMatrix& X, std::span<const double> w_new, std::span<const double> w_old,
                std::span<const Index> rows) const
    {
        if (!X.same_pattern(pattern_)) {
            throw Error(Errc::PatternMismatch, "previous matrix lacks the full Gram pattern");
        }
        check_weights(w_new);
        check_weights(w_old);
        auto xv = X.values_mut();
        for (Index i : rows) {
            if (i < 0 || i >= nrows_) throw Error(Errc::IndexOutOfRange, "update row");
            const double dw = w_new[i] - w_old[i];
            if (dw == 0.0) continue;
            for (Index c = contrib_ptr_[i]; c < contrib_ptr_[i + 1]; ++c) {
                xv[contrib_slot_[c]] += dw * contrib_coef_[c];
            }
        }
    }

private:
    Index slot_of(Index i, Index j) const
    {
        auto rows = pattern_.col_rows(j);
        auto it = std::lower_bound(rows.begin(), rows.end(), i);
        return pattern_.col_ptr()[j] + (it - rows.begin());
    }

    void check_weights(std::span<const double> w) const
    {
        if (static_cast<Index>(w.size()) != nrows_) {
            throw Error(Errc::DimensionMismatch, "weight vector length");
        }
    }

    Index nrows_ = 0;
    Index ncols_ = 0;
    CscMatrix pattern_;
    std::vector<Index> contrib_ptr_{0};
    std::vector<Index> contrib_slot_;
    std::vector<double> contrib_coef_;
    std::vector<Index> active_rows_;
};

}  // namespace nullflow
