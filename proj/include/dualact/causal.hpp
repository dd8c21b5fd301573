#pragma once

#include "optcore.hpp"

#include <memory>
#include <optional>
#include <tuple>

namespace dualact {

// Factorization of a square sparse matrix that is block lower triangular once
// rows and columns are grouped by level (time level for space-time systems).
// Only the diagonal blocks are factored; solves run by block substitution.
class CausalFactorization {
public:
    CausalFactorization(const SpMat& a, const std::vector<int>& row_level, const std::vector<int>& col_level)
    {
        if (a.rows() != a.cols())
            throw SolveError("causal system is not square: " + std::to_string(a.rows()) + " rows, " +
                                 std::to_string(a.cols()) + " unknowns",
                             INFINITY);
        n_ = static_cast<int>(a.rows());
        int levels = 0;
        for (int l : row_level)
            levels = std::max(levels, l + 1);
        for (int l : col_level)
            levels = std::max(levels, l + 1);
        rows_.assign(levels, {});
        cols_.assign(levels, {});
        for (int r = 0; r < n_; ++r)
            rows_[row_level[r]].push_back(r);
        for (int c = 0; c < n_; ++c)
            cols_[col_level[c]].push_back(c);
        local_.assign(n_, 0);
        for (int l = 0; l < levels; ++l) {
            if (rows_[l].size() != cols_[l].size())
                throw SolveError("level " + std::to_string(l) + " has " + std::to_string(rows_[l].size()) +
                                     " rows for " + std::to_string(cols_[l].size()) + " unknowns",
                                 INFINITY);
            for (std::size_t i = 0; i < cols_[l].size(); ++i)
                local_[cols_[l][i]] = static_cast<int>(i);
        }
        std::vector<int> row_local(n_);
        for (int l = 0; l < levels; ++l)
            for (std::size_t i = 0; i < rows_[l].size(); ++i)
                row_local[rows_[l][i]] = static_cast<int>(i);

        std::vector<std::vector<Triplet>> diag(levels);
        std::vector<Triplet> off;
        Eigen::SparseMatrix<double, Eigen::RowMajor> ar = a;
        for (int r = 0; r < n_; ++r) {
            int lr = row_level[r];
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(ar, r); it; ++it) {
                int lc = col_level[it.col()];
                if (lc > lr)
                    throw SolveError("system is not causal: row level " + std::to_string(lr) +
                                         " couples unknown level " + std::to_string(lc),
                                     INFINITY);
                if (lc == lr)
                    diag[lr].emplace_back(row_local[r], local_[it.col()], it.value());
                else
                    off.emplace_back(r, it.col(), it.value());
            }
        }
        off_.resize(n_, n_);
        off_.setFromTriplets(off.begin(), off.end());
        off_.makeCompressed();
        lu_.resize(levels);
        for (int l = 0; l < levels; ++l) {
            int m = static_cast<int>(rows_[l].size());
            if (m == 0)
                continue;
            SpMat block(m, m);
            block.setFromTriplets(diag[l].begin(), diag[l].end());
            block.makeCompressed();
            lu_[l] = std::make_unique<Eigen::SparseLU<SpMat>>();
            lu_[l]->compute(block);
            if (lu_[l]->info() != Eigen::Success)
                throw SolveError("singular diagonal block at level " + std::to_string(l), INFINITY);
        }
    }

    int size() const { return n_; }

    // x with A x = b.
    Vec solve(const Vec& b) const
    {
        Vec x = Vec::Zero(n_);
        for (std::size_t l = 0; l < rows_.size(); ++l) {
            const auto& rows = rows_[l];
            if (rows.empty())
                continue;
            Vec rhs(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) {
                int r = rows[i];
                double s = b[r];
                for (RowMat::InnerIterator it(off_, r); it; ++it)
                    s -= it.value() * x[it.col()];
                rhs[i] = s;
            }
            Vec y = lu_[l]->solve(rhs);
            for (std::size_t i = 0; i < cols_[l].size(); ++i)
                x[cols_[l][i]] = y[i];
        }
        return x;
    }

    // y with Aᵀ y = c.
    Vec solve_transpose(const Vec& c) const
    {
        Vec y = Vec::Zero(n_);
        Vec acc = Vec::Zero(n_);
        for (std::size_t l = rows_.size(); l-- > 0;) {
            const auto& cols = cols_[l];
            if (cols.empty())
                continue;
            Vec rhs(cols.size());
            for (std::size_t i = 0; i < cols.size(); ++i)
                rhs[i] = c[cols[i]] - acc[cols[i]];
            Vec v = lu_[l]->transpose().solve(rhs);
            for (std::size_t i = 0; i < rows_[l].size(); ++i) {
                int r = rows_[l][i];
                y[r] = v[i];
                for (RowMat::InnerIterator it(off_, r); it; ++it)
                    acc[it.col()] += it.value() * v[i];
            }
        }
        return y;
    }

private:
    using RowMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
    int n_ = 0;
    std::vector<std::vector<int>> rows_, cols_;
    std::vector<int> local_;
    RowMat off_;
    std::vector<std::unique_ptr<Eigen::SparseLU<SpMat>>> lu_;
};

} // namespace dualact
