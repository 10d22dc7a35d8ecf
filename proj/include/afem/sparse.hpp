#pragma once

#include <iosfwd>
#include <span>
#include <vector>

namespace afem {

/**
 * Symmetric sparse matrix in compressed-row form. Both triangles are stored
 * so rows double as columns; column indices are sorted within each row.
 */
class SparseSym
{
public:
    struct Triplet
    {
        int row;
        int col;
        double value;
    };

    SparseSym() = default;

    /// Duplicates are summed in input order, so the result depends only on
    /// the triplet sequence.
    static SparseSym from_triplets(int n, std::vector<Triplet> triplets);

    int dimension() const { return n_; }
    std::size_t nonzeros() const { return values_.size(); }

    std::span<const int> row_offsets() const { return offsets_; }
    std::span<const int> columns() const { return columns_; }
    std::span<const double> values() const { return values_; }

    double operator()(int i, int j) const;

    void multiply(std::span<const double> x, std::span<double> y) const;
    std::vector<double> multiply(std::span<const double> x) const;
    double quadratic_form(std::span<const double> x) const;
    double bilinear_form(std::span<const double> x, std::span<const double> y) const;

    /// Max |A_ij - A_ji|.
    double asymmetry() const;

    /// MatrixMarket coordinate format (full storage, 1-based).
    void write_matrix_market(std::ostream& out) const;

private:
    int n_ = 0;
    std::vector<int> offsets_{0};
    std::vector<int> columns_;
    std::vector<double> values_;
};

double dot(std::span<const double> a, std::span<const double> b);

} // namespace afem
