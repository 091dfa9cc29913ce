/*==============================================================================
 *  sparse.hpp
 *
 *  Compressed-sparse-column storage plus the handful of kernels the solvers
 *  need (matvec, transpose, norms) and MatrixMarket coordinate I/O.
 *
 *============================================================================*/
#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"

namespace nullflow {

using Index = std::ptrdiff_t;

enum class Symmetry { General, SymmetricLowerStored };

struct Triplet {
    Index row;
    Index col;
    double value;
};

class CscMatrix {
public:
    CscMatrix() : col_ptr_(1, 0) {}

    /// Takes ownership of already-compressed arrays; validates the invariants
    /// (monotone col_ptr, strictly increasing rows per column, lower storage).
    CscMatrix(Index nrows, Index ncols, std::vector<Index> col_ptr,
              std::vector<Index> row_idx, std::vector<double> values,
              Symmetry sym = Symmetry::General)
        : nrows_(nrows), ncols_(ncols), col_ptr_(std::move(col_ptr)),
          row_idx_(std::move(row_idx)), values_(std::move(values)), sym_(sym)
    {
        validate();
    }

    /// Duplicates are summed. For SymmetricLowerStored, entries above the
    /// diagonal are mirrored into the lower triangle.
    static CscMatrix from_triplets(Index nrows, Index ncols, std::span<const Triplet> entries,
                                   Symmetry sym = Symmetry::General)
    {
        if (sym == Symmetry::SymmetricLowerStored && nrows != ncols) {
            throw Error(Errc::DimensionMismatch, "symmetric matrix must be square");
        }
        std::vector<Triplet> t(entries.begin(), entries.end());
        for (auto& e : t) {
            if (e.row < 0 || e.row >= nrows || e.col < 0 || e.col >= ncols) {
                throw Error(Errc::IndexOutOfRange, "triplet outside matrix bounds");
            }
            if (sym == Symmetry::SymmetricLowerStored && e.row < e.col) {
                std::swap(e.row, e.col);
            }
        }
        std::stable_sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
            return a.col != b.col ? a.col < b.col : a.row < b.row;
        });

        std::vector<Index> cp(static_cast<std::size_t>(ncols) + 1, 0);
        std::vector<Index> ri;
        std::vector<double> vx;
        ri.reserve(t.size());
        vx.reserve(t.size());
        for (std::size_t k = 0; k < t.size(); ++k) {
            if (k > 0 && t[k].col == t[k - 1].col && t[k].row == t[k - 1].row) {
                vx.back() += t[k].value;
                continue;
            }
            ri.push_back(t[k].row);
            vx.push_back(t[k].value);
            ++cp[t[k].col + 1];
        }
        std::partial_sum(cp.begin(), cp.end(), cp.begin());
        return CscMatrix(nrows, ncols, std::move(cp), std::move(ri), std::move(vx), sym);
    }

    static CscMatrix identity(Index n)
    {
        std::vector<Index> cp(static_cast<std::size_t>(n) + 1);
        std::iota(cp.begin(), cp.end(), Index{0});
        std::vector<Index> ri(static_cast<std::size_t>(n));
        std::iota(ri.begin(), ri.end(), Index{0});
        return CscMatrix(n, n, std::move(cp), std::move(ri),
                         std::vector<double>(static_cast<std::size_t>(n), 1.0),
                         Symmetry::SymmetricLowerStored);
    }

    /// Row-major dense input; only the lower triangle is read when `sym` is
    /// SymmetricLowerStored. Exact zeros are dropped.
    static CscMatrix from_dense(Index nrows, Index ncols, std::span<const double> dense,
                                Symmetry sym = Symmetry::General)
    {
        std::vector<Triplet> t;
        for (Index j = 0; j < ncols; ++j) {
            for (Index i = (sym == Symmetry::General ? 0 : j); i < nrows; ++i) {
                double v = dense[static_cast<std::size_t>(i * ncols + j)];
                if (v != 0.0) t.push_back({i, j, v});
            }
        }
        return from_triplets(nrows, ncols, t, sym);
    }

    Index rows() const noexcept { return nrows_; }
    Index cols() const noexcept { return ncols_; }
    Index nnz() const noexcept { return col_ptr_.back(); }
    Symmetry symmetry() const noexcept { return sym_; }

    std::span<const Index> col_ptr() const noexcept { return col_ptr_; }
    std::span<const Index> row_idx() const noexcept { return row_idx_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values_mut() noexcept { return values_; }

    std::span<const Index> col_rows(Index j) const noexcept
    {
        return std::span<const Index>(row_idx_).subspan(
            static_cast<std::size_t>(col_ptr_[j]),
            static_cast<std::size_t>(col_ptr_[j + 1] - col_ptr_[j]));
    }

    std::span<const double> col_values(Index j) const noexcept
    {
        return std::span<const double>(values_).subspan(
            static_cast<std::size_t>(col_ptr_[j]),
            static_cast<std::size_t>(col_ptr_[j + 1] - col_ptr_[j]));
    }

    double at(Index i, Index j) const
    {
        if (sym_ == Symmetry::SymmetricLowerStored && i < j) std::swap(i, j);
        auto rows = col_rows(j);
        auto it = std::lower_bound(rows.begin(), rows.end(), i);
        if (it == rows.end() || *it != i) return 0.0;
        return values_[static_cast<std::size_t>(col_ptr_[j] + (it - rows.begin()))];
    }

    bool same_pattern(const CscMatrix& other) const noexcept
    {
        return nrows_ == other.nrows_ && ncols_ == other.ncols_ && sym_ == other.sym_ &&
               col_ptr_ == other.col_ptr_ && row_idx_ == other.row_idx_;
    }

    std::vector<double> multiply(std::span<const double> x) const
    {
        if (static_cast<Index>(x.size()) != ncols_) {
            throw Error(Errc::DimensionMismatch, "matvec operand length");
        }
        std::vector<double> y(static_cast<std::size_t>(nrows_), 0.0);
        for (Index j = 0; j < ncols_; ++j) {
            for (Index p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) {
                Index i = row_idx_[p];
                y[i] += values_[p] * x[j];
                if (sym_ == Symmetry::SymmetricLowerStored && i != j) {
                    y[j] += values_[p] * x[i];
                }
            }
        }
        return y;
    }

    /// y = Aᵀx for a General matrix.
    std::vector<double> multiply_transposed(std::span<const double> x) const
    {
        if (sym_ == Symmetry::SymmetricLowerStored) return multiply(x);
        if (static_cast<Index>(x.size()) != nrows_) {
            throw Error(Errc::DimensionMismatch, "transposed matvec operand length");
        }
        std::vector<double> y(static_cast<std::size_t>(ncols_), 0.0);
        for (Index j = 0; j < ncols_; ++j) {
            double s = 0.0;
            for (Index p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) {
                s += values_[p] * x[row_idx_[p]];
            }
            y[j] = s;
        }
        return y;
    }

    CscMatrix transpose() const
    {
        if (sym_ == Symmetry::SymmetricLowerStored) return *this;
        std::vector<Index> cp(static_cast<std::size_t>(nrows_) + 1, 0);
        for (Index p = 0; p < nnz(); ++p) ++cp[row_idx_[p] + 1];
        std::partial_sum(cp.begin(), cp.end(), cp.begin());
        std::vector<Index> next(cp.begin(), cp.end() - 1);
        std::vector<Index> ri(static_cast<std::size_t>(nnz()));
        std::vector<double> vx(static_cast<std::size_t>(nnz()));
        for (Index j = 0; j < ncols_; ++j) {
            for (Index p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) {
                Index q = next[row_idx_[p]]++;
                ri[q] = j;
                vx[q] = values_[p];
            }
        }
        return CscMatrix(ncols_, nrows_, std::move(cp), std::move(ri), std::move(vx));
    }

    /// Expands symmetric storage; the result has both triangles.
    CscMatrix to_general() const
    {
        if (sym_ == Symmetry::General) return *this;
        std::vector<Triplet> t;
        t.reserve(static_cast<std::size_t>(2 * nnz()));
        for (Index j = 0; j < ncols_; ++j) {
            for (Index p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) {
                t.push_back({row_idx_[p], j, values_[p]});
                if (row_idx_[p] != j) t.push_back({j, row_idx_[p], values_[p]});
            }
        }
        return from_triplets(nrows_, ncols_, t, Symmetry::General);
    }

    /// Row-major dense copy (symmetric storage expanded).
    std::vector<double> to_dense() const
    {
        std::vector<double> d(static_cast<std::size_t>(nrows_ * ncols_), 0.0);
        for (Index j = 0; j < ncols_; ++j) {
            for (Index p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) {
                Index i = row_idx_[p];
                d[static_cast<std::size_t>(i * ncols_ + j)] += values_[p];
                if (sym_ == Symmetry::SymmetricLowerStored && i != j) {
                    d[static_cast<std::size_t>(j * ncols_ + i)] += values_[p];
                }
            }
        }
        return d;
    }

    /// Maximum absolute row sum.
    double norm_inf() const
    {
        std::vector<double> rs(static_cast<std::size_t>(nrows_), 0.0);
        for (Index j = 0; j < ncols_; ++j) {
            for (Index p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) {
                rs[row_idx_[p]] += std::abs(values_[p]);
                if (sym_ == Symmetry::SymmetricLowerStored && row_idx_[p] != j) {
                    rs[j] += std::abs(values_[p]);
                }
            }
        }
        return rs.empty() ? 0.0 : *std::max_element(rs.begin(), rs.end());
    }

    friend bool operator==(const CscMatrix&, const CscMatrix&) = default;

private:
    void validate() const
    {
        if (nrows_ < 0 || ncols_ < 0 ||
            col_ptr_.size() != static_cast<std::size_t>(ncols_) + 1 || col_ptr_.front() != 0) {
            throw Error(Errc::DimensionMismatch, "col_ptr length must be ncols+1 starting at 0");
        }
        if (row_idx_.size() != static_cast<std::size_t>(col_ptr_.back()) ||
            values_.size() != row_idx_.size()) {
            throw Error(Errc::DimensionMismatch, "col_ptr[ncols] must equal nnz");
        }
        if (sym_ == Symmetry::SymmetricLowerStored && nrows_ != ncols_) {
            throw Error(Errc::DimensionMismatch, "symmetric matrix must be square");
        }
        for (Index j = 0; j < ncols_; ++j) {
            if (col_ptr_[j + 1] < col_ptr_[j]) {
                throw Error(Errc::PatternMismatch, "col_ptr not monotone");
            }
            for (Index p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) {
                Index i = row_idx_[p];
                if (i < 0 || i >= nrows_) throw Error(Errc::IndexOutOfRange, "row index");
                if (p > col_ptr_[j] && row_idx_[p - 1] >= i) {
                    throw Error(Errc::PatternMismatch, "row indices not strictly increasing");
                }
                if (sym_ == Symmetry::SymmetricLowerStored && i < j) {
                    throw Error(Errc::PatternMismatch, "upper-triangle entry in lower storage");
                }
            }
        }
    }

    Index nrows_ = 0;
    Index ncols_ = 0;
    std::vector<Index> col_ptr_;
    std::vector<Index> row_idx_;
    std::vector<double> values_;
    Symmetry sym_ = Symmetry::General;
};

inline double norm_inf(std::span<const double> v)
{
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline double norm_1(std::span<const double> v)
{
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}

/*------------------------------------------------------------------------------
 *  MatrixMarket coordinate format
 *----------------------------------------------------------------------------*/

inline void write_matrix_market(std::ostream& os, const CscMatrix& A)
{
    os << "%%MatrixMarket matrix coordinate real "
       << (A.symmetry() == Symmetry::SymmetricLowerStored ? "symmetric" : "general") << '\n';
    os << A.rows() << ' ' << A.cols() << ' ' << A.nnz() << '\n';
    os.precision(17);
    for (Index j = 0; j < A.cols(); ++j) {
        auto rows = A.col_rows(j);
        auto vals = A.col_values(j);
        for (std::size_t k = 0; k < rows.size(); ++k) {
            os << rows[k] + 1 << ' ' << j + 1 << ' ' << vals[k] << '\n';
        }
    }
}

inline CscMatrix read_matrix_market(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line.rfind("%%MatrixMarket", 0) != 0) {
        throw Error(Errc::ParseError, "missing %%MatrixMarket banner");
    }
    std::istringstream banner(line);
    std::string tag, object, format, field, symmetry;
    banner >> tag >> object >> format >> field >> symmetry;
    auto lower = [](std::string s) {
        std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
        return s;
    };
    object = lower(object);
    format = lower(format);
    field = lower(field);
    symmetry = lower(symmetry);
    if (object != "matrix" || format != "coordinate") {
        throw Error(Errc::ParseError, "only 'matrix coordinate' is supported");
    }
    if (field != "real" && field != "integer" && field != "pattern") {
        throw Error(Errc::ParseError, "unsupported field '" + field + "'");
    }
    if (symmetry != "general" && symmetry != "symmetric") {
        throw Error(Errc::ParseError, "unsupported symmetry '" + symmetry + "'");
    }
    while (std::getline(is, line)) {
        if (!line.empty() && line[0] != '%') break;
    }
    std::istringstream hdr(line);
    Index m = 0, n = 0, nz = 0;
    if (!(hdr >> m >> n >> nz)) throw Error(Errc::ParseError, "bad size line");

    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(nz));
    for (Index k = 0; k < nz; ++k) {
        Index i = 0, j = 0;
        double v = 1.0;
        if (!(is >> i >> j)) throw Error(Errc::ParseError, "truncated entry list");
        if (field != "pattern" && !(is >> v)) throw Error(Errc::ParseError, "missing value");
        t.push_back({i - 1, j - 1, v});
    }
    return CscMatrix::from_triplets(
        m, n, t, symmetry == "symmetric" ? Symmetry::SymmetricLowerStored : Symmetry::General);
}

}  // namespace nullflow
