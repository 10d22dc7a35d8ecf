#pragma once

#include "afem/sparse.hpp"

#include <span>
#include <vector>

namespace afem {

/// Approximate minimum degree ordering on the quotient graph of A.
/// order[k] is the original index eliminated at step k.
std::vector<int> minimum_degree_ordering(const SparseSym& a);

/**
 * Sparse LL^T factorization of a symmetric positive definite matrix,
 * up-looking, on the minimum-degree permuted matrix.
 */
class SparseCholesky
{
public:
    /// Throws afem::Error on a non-positive pivot.
    explicit SparseCholesky(const SparseSym& a);
    SparseCholesky(const SparseSym& a, std::vector<int> order);

    int dimension() const { return n_; }
    std::size_t factor_nonzeros() const { return row_index_.size(); }
    std::span<const int> ordering() const { return order_; }

    void solve(std::span<const double> b, std::span<double> x) const;
    std::vector<double> solve(std::span<const double> b) const;

private:
    void factorize(const SparseSym& a);

    int n_ = 0;
    std::vector<int> order_;
    std::vector<int> inverse_;
    // Column-compressed L, diagonal first in each column.
    std::vector<int> col_ptr_;
    std::vector<int> row_index_;
    std::vector<double> values_;
};

} // namespace afem
