#include "afem/cholesky.hpp"

#include "afem/common.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <sstream>

namespace afem {

std::vector<int> minimum_degree_ordering(const SparseSym& a)
{
    const int n = a.dimension();
    enum Status : char { kVariable, kElement, kAbsorbed };

    std::vector<std::vector<int>> vars(n);    // variable neighbors
    std::vector<std::vector<int>> elems(n);   // element neighbors
    std::vector<std::vector<int>> members(n); // variables of an element
    std::vector<Status> status(n, kVariable);
    std::vector<int> degree(n);

    const auto offsets = a.row_offsets();
    const auto cols = a.columns();
    for (int i = 0; i < n; ++i) {
        for (int k = offsets[i]; k < offsets[i + 1]; ++k)
            if (cols[k] != i) vars[i].push_back(cols[k]);
        degree[i] = static_cast<int>(vars[i].size());
    }

    using Entry = std::pair<int, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    for (int i = 0; i < n; ++i) heap.push({degree[i], i});

    std::vector<int> stamp(n, -1);
    std::vector<int> w(n, 0);
    std::vector<int> w_stamp(n, -1);
    std::vector<int> order;
    order.reserve(n);
    std::vector<int> pivot_set;

    for (int k = 0; k < n; ++k) {
        int p = -1;
        while (!heap.empty()) {
            const auto [d, i] = heap.top();
            heap.pop();
            if (status[i] == kVariable && degree[i] == d) {
                p = i;
                break;
            }
        }
        if (p < 0) throw Error("minimum_degree_ordering: priority queue exhausted");

        // Pivot pattern: variables adjacent to p directly or through elements.
        pivot_set.clear();
        stamp[p] = k;
        for (int j : vars[p]) {
            if (status[j] == kVariable && stamp[j] != k) {
                stamp[j] = k;
                pivot_set.push_back(j);
            }
        }
        for (int e : elems[p]) {
            if (status[e] != kElement) continue;
            for (int j : members[e]) {
                if (status[j] == kVariable && stamp[j] != k) {
                    stamp[j] = k;
                    pivot_set.push_back(j);
                }
            }
            status[e] = kAbsorbed;
            std::vector<int>().swap(members[e]);
        }
        status[p] = kElement;
        members[p] = pivot_set;
        std::vector<int>().swap(vars[p]);
        std::vector<int>().swap(elems[p]);
        order.push_back(p);

        for (int i : pivot_set) {
            auto& el = elems[i];
            el.erase(std::remove_if(el.begin(), el.end(), [&](int e) { return status[e] != kElement; }), el.end());
            el.push_back(p);
            auto& vs = vars[i];
            vs.erase(std::remove_if(vs.begin(), vs.end(),
                                    [&](int j) { return status[j] != kVariable || stamp[j] == k; }),
                     vs.end());
        }

        // w[e] = |L_e \ L_p| for elements touching the pivot set.
        for (int i : pivot_set) {
            for (int e : elems[i]) {
                if (e == p) continue;
                if (w_stamp[e] != k) {
                    w_stamp[e] = k;
                    w[e] = static_cast<int>(members[e].size());
                }
                --w[e];
            }
        }

        const int remaining = n - k - 1;
        const int pivot_size = static_cast<int>(pivot_set.size());
        for (int i : pivot_set) {
            long d = static_cast<long>(vars[i].size()) + pivot_size - 1;
            auto& el = elems[i];
            for (int e : el) {
                if (e == p) continue;
                if (w[e] == 0) {
                    // L_e inside L_p: e is redundant.
                    status[e] = kAbsorbed;
                    std::vector<int>().swap(members[e]);
                    continue;
                }
                d += w[e];
            }
            el.erase(std::remove_if(el.begin(), el.end(), [&](int e) { return status[e] != kElement; }), el.end());
            d = std::min<long>({d, remaining - 1L, static_cast<long>(degree[i]) + pivot_size});
            degree[i] = static_cast<int>(std::max<long>(d, 0));
            heap.push({degree[i], i});
        }
    }
    return order;
}

SparseCholesky::SparseCholesky(const SparseSym& a) : SparseCholesky(a, minimum_degree_ordering(a)) {}

SparseCholesky::SparseCholesky(const SparseSym& a, std::vector<int> order) : n_(a.dimension()), order_(std::move(order))
{
    if (static_cast<int>(order_.size()) != n_) throw Error("cholesky: ordering has the wrong length");
    inverse_.assign(n_, -1);
    for (int k = 0; k < n_; ++k) {
        if (order_[k] < 0 || order_[k] >= n_ || inverse_[order_[k]] >= 0) throw Error("cholesky: invalid permutation");
        inverse_[order_[k]] = k;
    }
    factorize(a);
}

void SparseCholesky::factorize(const SparseSym& a)
{
    const int n = n_;
    // Upper triangle of the permuted matrix, by column.
    std::vector<int> cp(n + 1, 0);
    const auto offsets = a.row_offsets();
    const auto cols = a.columns();
    const auto vals = a.values();
    for (int r = 0; r < n; ++r)
        for (int k = offsets[r]; k < offsets[r + 1]; ++k) {
            const int i = inverse_[r];
            const int j = inverse_[cols[k]];
            if (i <= j) ++cp[j + 1];
        }
    for (int j = 0; j < n; ++j) cp[j + 1] += cp[j];
    std::vector<int> ci(cp[n]);
    std::vector<double> cx(cp[n]);
    {
        std::vector<int> next(cp.begin(), cp.end() - 1);
        for (int r = 0; r < n; ++r)
            for (int k = offsets[r]; k < offsets[r + 1]; ++k) {
                const int i = inverse_[r];
                const int j = inverse_[cols[k]];
                if (i <= j) {
                    ci[next[j]] = i;
                    cx[next[j]++] = vals[k];
                }
            }
    }

    // Elimination tree.
    std::vector<int> parent(n, -1);
    std::vector<int> ancestor(n, -1);
    for (int k = 0; k < n; ++k) {
        for (int p = cp[k]; p < cp[k + 1]; ++p) {
            int i = ci[p];
            while (i != -1 && i < k) {
                const int next = ancestor[i];
                ancestor[i] = k;
                if (next == -1) parent[i] = k;
                i = next;
            }
        }
    }

    std::vector<int> stack(n);
    std::vector<int> mark(n, -1);
    // Nonzero pattern of row k of L, returned in stack[top..n).
    auto ereach = [&](int k) {
        int top = n;
        mark[k] = k;
        for (int p = cp[k]; p < cp[k + 1]; ++p) {
            int i = ci[p];
            if (i > k) continue;
            int len = 0;
            for (; mark[i] != k; i = parent[i]) {
                stack[len++] = i;
                mark[i] = k;
            }
            while (len > 0) stack[--top] = stack[--len];
        }
        return top;
    };

    // Column counts from the row patterns.
    std::vector<int> counts(n, 1);
    for (int k = 0; k < n; ++k)
        for (int top = ereach(k); top < n; ++top) ++counts[stack[top]];
    col_ptr_.assign(n + 1, 0);
    for (int j = 0; j < n; ++j) col_ptr_[j + 1] = col_ptr_[j] + counts[j];
    row_index_.assign(col_ptr_[n], 0);
    values_.assign(col_ptr_[n], 0.0);

    std::fill(mark.begin(), mark.end(), -1);
    std::vector<int> fill(col_ptr_.begin(), col_ptr_.end() - 1);
    std::vector<double> x(n, 0.0);
    for (int k = 0; k < n; ++k) {
        int top = ereach(k);
        for (int p = cp[k]; p < cp[k + 1]; ++p)
            if (ci[p] <= k) x[ci[p]] = cx[p];
        double d = x[k];
        x[k] = 0.0;
        for (; top < n; ++top) {
            const int i = stack[top];
            const double lki = x[i] / values_[col_ptr_[i]];
            x[i] = 0.0;
            for (int p = col_ptr_[i] + 1; p < fill[i]; ++p) x[row_index_[p]] -= values_[p] * lki;
            d -= lki * lki;
            const int p = fill[i]++;
            row_index_[p] = k;
            values_[p] = lki;
        }
        if (!(d > 0.0)) {
            std::ostringstream msg;
            msg << "cholesky: non-positive pivot " << d << " at step " << k << " of " << n
                << " (matrix not positive definite)";
            throw Error(msg.str());
        }
        const int p = fill[k]++;
        row_index_[p] = k;
        values_[p] = std::sqrt(d);
    }
}

void SparseCholesky::solve(std::span<const double> b, std::span<double> x) const
{
    if (static_cast<int>(b.size()) != n_ || static_cast<int>(x.size()) != n_) throw Error("cholesky: dimension mismatch");
    std::vector<double> y(n_);
    for (int k = 0; k < n_; ++k) y[k] = b[order_[k]];
    for (int j = 0; j < n_; ++j) {
        y[j] /= values_[col_ptr_[j]];
        const double yj = y[j];
        for (int p = col_ptr_[j] + 1; p < col_ptr_[j + 1]; ++p) y[row_index_[p]] -= values_[p] * yj;
    }
    for (int j = n_ - 1; j >= 0; --j) {
        double sum = y[j];
        for (int p = col_ptr_[j] + 1; p < col_ptr_[j + 1]; ++p) sum -= values_[p] * y[row_index_[p]];
        y[j] = sum / values_[col_ptr_[j]];
    }
    for (int k = 0; k < n_; ++k) x[order_[k]] = y[k];
}

std::vector<double> SparseCholesky::solve(std::span<const double> b) const
{
    std::vector<double> x(n_);
    solve(b, x);
    return x;
}

} // namespace afem
