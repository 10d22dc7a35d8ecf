#include "afem/sparse.hpp"

#include "afem/common.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace afem {

SparseSym SparseSym::from_triplets(int n, std::vector<Triplet> triplets)
{
    SparseSym m;
    m.n_ = n;
    for (const auto& t : triplets)
        if (t.row < 0 || t.row >= n || t.col < 0 || t.col >= n) throw Error("sparse: triplet index out of range");

    // Stable sort keeps the accumulation order of duplicates fixed.
    std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    m.offsets_.assign(n + 1, 0);
    m.columns_.clear();
    m.values_.clear();
    for (std::size_t i = 0; i < triplets.size();) {
        std::size_t j = i;
        double sum = 0.0;
        while (j < triplets.size() && triplets[j].row == triplets[i].row && triplets[j].col == triplets[i].col) {
            sum += triplets[j].value;
            ++j;
        }
        m.columns_.push_back(triplets[i].col);
        m.values_.push_back(sum);
        ++m.offsets_[triplets[i].row + 1];
        i = j;
    }
    for (int r = 0; r < n; ++r) m.offsets_[r + 1] += m.offsets_[r];
    return m;
}

double SparseSym::operator()(int i, int j) const
{
    const auto first = columns_.begin() + offsets_[i];
    const auto last = columns_.begin() + offsets_[i + 1];
    const auto it = std::lower_bound(first, last, j);
    return (it != last && *it == j) ? values_[it - columns_.begin()] : 0.0;
}

void SparseSym::multiply(std::span<const double> x, std::span<double> y) const
{
    for (int r = 0; r < n_; ++r) {
        double sum = 0.0;
        for (int k = offsets_[r]; k < offsets_[r + 1]; ++k) sum += values_[k] * x[columns_[k]];
        y[r] = sum;
    }
}

std::vector<double> SparseSym::multiply(std::span<const double> x) const
{
    std::vector<double> y(n_);
    multiply(x, y);
    return y;
}

double SparseSym::quadratic_form(std::span<const double> x) const
{
    return bilinear_form(x, x);
}

double SparseSym::bilinear_form(std::span<const double> x, std::span<const double> y) const
{
    double sum = 0.0;
    for (int r = 0; r < n_; ++r) {
        double row = 0.0;
        for (int k = offsets_[r]; k < offsets_[r + 1]; ++k) row += values_[k] * y[columns_[k]];
        sum += x[r] * row;
    }
    return sum;
}

double SparseSym::asymmetry() const
{
    double worst = 0.0;
    for (int r = 0; r < n_; ++r)
        for (int k = offsets_[r]; k < offsets_[r + 1]; ++k)
            worst = std::max(worst, std::abs(values_[k] - (*this)(columns_[k], r)));
    return worst;
}

void SparseSym::write_matrix_market(std::ostream& out) const
{
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << n_ << ' ' << n_ << ' ' << values_.size() << '\n';
    out << std::setprecision(17);
    for (int r = 0; r < n_; ++r)
        for (int k = offsets_[r]; k < offsets_[r + 1]; ++k)
            out << r + 1 << ' ' << columns_[k] + 1 << ' ' << values_[k] << '\n';
}

double dot(std::span<const double> a, std::span<const double> b)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

} // namespace afem
