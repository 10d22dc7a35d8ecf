#include "afem/eigsolve.hpp"

#include "afem/cholesky.hpp"
#include "afem/common.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <limits>
#include <sstream>

namespace afem {

namespace {

void axpy(double a, std::span<const double> x, std::span<double> y)
{
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

// Largest-magnitude entry positive, so repeated runs report identical signs.
void fix_sign(std::vector<double>& v)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (std::abs(v[i]) > std::abs(v[best]) * (1.0 + 1e-9)) best = i;
    if (!v.empty() && v[best] < 0.0)
        for (double& x : v) x = -x;
}

Eigen::MatrixXd to_dense(const SparseSym& a)
{
    const int n = a.dimension();
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    const auto offsets = a.row_offsets();
    const auto cols = a.columns();
    const auto vals = a.values();
    for (int r = 0; r < n; ++r)
        for (int k = offsets[r]; k < offsets[r + 1]; ++k) d(r, cols[k]) = vals[k];
    return d;
}

std::vector<EigenPair> dense_solve(const SparseSym& stiffness, const SparseSym& mass, int nev)
{
    const Eigen::MatrixXd k = to_dense(stiffness);
    const Eigen::MatrixXd m = to_dense(mass);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(k, m);
    if (solver.info() != Eigen::Success) throw Error("solve_smallest: dense generalized eigensolver failed");
    std::vector<EigenPair> out;
    for (int j = 0; j < nev; ++j) {
        const Eigen::VectorXd col = solver.eigenvectors().col(j);
        out.push_back({solver.eigenvalues()(j), std::vector<double>(col.data(), col.data() + col.size())});
    }
    return out;
}

class KrylovBasis
{
public:
    KrylovBasis(const SparseSym& k, const SparseSym& m) : k_(k), m_(m) {}

    std::size_t size() const { return v.size(); }

    // M-orthogonalizes w against the basis (two passes) and appends it.
    // Returns false when w is numerically inside the span.
    bool add(std::vector<double> w)
    {
        const std::vector<double> mw0 = m_.multiply(w);
        const double norm0 = dot(w, mw0);
        if (!(norm0 > 0.0)) return false;
        for (int pass = 0; pass < 2; ++pass)
            for (std::size_t i = 0; i < v.size(); ++i) axpy(-dot(mv[i], w), v[i], w);
        std::vector<double> mw = m_.multiply(w);
        const double norm2 = dot(w, mw);
        if (!(norm2 > 1e-20 * norm0)) return false;
        const double s = 1.0 / std::sqrt(norm2);
        for (double& x : w) x *= s;
        for (double& x : mw) x *= s;
        kv.push_back(k_.multiply(w));
        v.push_back(std::move(w));
        mv.push_back(std::move(mw));
        return true;
    }

    std::vector<std::vector<double>> v, mv, kv;

private:
    const SparseSym& k_;
    const SparseSym& m_;
};

std::vector<std::vector<double>> combine(const std::vector<std::vector<double>>& basis, const Eigen::MatrixXd& y,
                                         int columns)
{
    const std::size_t n = basis.front().size();
    std::vector<std::vector<double>> out(columns, std::vector<double>(n, 0.0));
    for (int j = 0; j < columns; ++j)
        for (std::size_t i = 0; i < basis.size(); ++i) axpy(y(static_cast<Eigen::Index>(i), j), basis[i], out[j]);
    return out;
}

} // namespace

std::vector<EigenPair> solve_smallest(const SparseSym& stiffness, const SparseSym& mass, int nev,
                                      const EigenOptions& options)
{
    const int n = stiffness.dimension();
    if (mass.dimension() != n) throw Error("solve_smallest: K and M dimensions differ");
    if (nev < 1 || nev > n) throw Error("solve_smallest: nev must lie in [1, dimension]");

    std::vector<EigenPair> pairs;
    if (n <= options.dense_threshold) {
        pairs = dense_solve(stiffness, mass, nev);
    } else {
        const SparseCholesky factor(stiffness);
        const int bs = std::min(std::max(options.block_size, 1), n);
        const int keep_target = std::min(n, nev + bs);
        const int m_max = std::min(n, std::max(keep_target + 3 * bs, 2 * nev + 4 * bs));

        std::mt19937_64 rng(options.seed);
        std::uniform_real_distribution<double> uniform(-1.0, 1.0);
        auto random_vector = [&] {
            std::vector<double> w(n);
            for (double& x : w) x = uniform(rng);
            return w;
        };

        KrylovBasis basis(stiffness, mass);
        std::vector<int> frontier;
        for (int j = 0; j < bs; ++j)
            if (basis.add(random_vector())) frontier.push_back(static_cast<int>(basis.size()) - 1);

        int restarts = 0;
        double worst_residual = 0.0;
        while (true) {
            while (static_cast<int>(basis.size()) < m_max) {
                std::vector<int> next;
                for (int idx : frontier) {
                    if (static_cast<int>(basis.size()) >= m_max) break;
                    if (basis.add(factor.solve(basis.mv[idx]))) next.push_back(static_cast<int>(basis.size()) - 1);
                }
                if (next.empty()) {
                    // Invariant subspace reached; continue from a fresh direction.
                    if (static_cast<int>(basis.size()) >= n || !basis.add(random_vector())) break;
                    next.push_back(static_cast<int>(basis.size()) - 1);
                }
                frontier = std::move(next);
            }

            const int m = static_cast<int>(basis.size());
            Eigen::MatrixXd h(m, m), b(m, m);
            for (int i = 0; i < m; ++i)
                for (int j = i; j < m; ++j) {
                    h(i, j) = h(j, i) = 0.5 * (dot(basis.v[i], basis.kv[j]) + dot(basis.v[j], basis.kv[i]));
                    b(i, j) = b(j, i) = 0.5 * (dot(basis.v[i], basis.mv[j]) + dot(basis.v[j], basis.mv[i]));
                }
            Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ritz(h, b);
            if (ritz.info() != Eigen::Success) throw Error("solve_smallest: Rayleigh-Ritz step failed");

            const int keep = std::min(m, keep_target);
            const Eigen::MatrixXd y = ritz.eigenvectors().leftCols(keep);
            auto x = combine(basis.v, y, keep);
            auto mx = combine(basis.mv, y, keep);
            auto kx = combine(basis.kv, y, keep);

            std::vector<double> residual(keep);
            worst_residual = 0.0;
            for (int j = 0; j < keep; ++j) {
                const double theta = ritz.eigenvalues()(j);
                if (j >= nev) {
                    residual[j] = 0.0;
                    continue;
                }
                std::vector<double> r = kx[j];
                axpy(-theta, mx[j], r);
                // ||r||_{K^-1} / sqrt(theta ||x||_M^2) stays above round-off
                // on fine meshes where the 2-norm residual does not.
                const std::vector<double> kr = factor.solve(r);
                residual[j] = std::sqrt(std::max(dot(r, kr), 0.0) / (std::abs(theta) * dot(x[j], mx[j])));
                worst_residual = std::max(worst_residual, residual[j]);
            }

            if (worst_residual <= options.tol || m >= n) {
                for (int j = 0; j < nev; ++j) pairs.push_back({ritz.eigenvalues()(j), std::move(x[j])});
                break;
            }
            if (++restarts > options.max_restarts) {
                std::ostringstream msg;
                msg << "solve_smallest: no convergence after " << options.max_restarts
                    << " restarts (dimension " << n << ", nev " << nev << ", worst relative residual "
                    << worst_residual << ", tol " << options.tol << ")";
                throw Error(msg.str());
            }

            // Restart from the retained Ritz vectors; expand the least
            // converged wanted ones first.
            std::vector<int> by_residual(nev);
            std::iota(by_residual.begin(), by_residual.end(), 0);
            std::stable_sort(by_residual.begin(), by_residual.end(),
                             [&](int a, int c) { return residual[a] > residual[c]; });
            frontier.clear();
            for (int j : by_residual)
                if (static_cast<int>(frontier.size()) < bs && residual[j] > options.tol) frontier.push_back(j);
            for (int j = nev; j < keep && static_cast<int>(frontier.size()) < bs; ++j) frontier.push_back(j);

            basis.v = std::move(x);
            basis.mv = std::move(mx);
            basis.kv = std::move(kx);
        }
    }

    std::vector<std::vector<double>> vectors;
    for (auto& p : pairs) vectors.push_back(std::move(p.vector));
    m_orthonormalize(vectors, mass);
    for (std::size_t j = 0; j < pairs.size(); ++j) {
        fix_sign(vectors[j]);
        pairs[j].vector = std::move(vectors[j]);
    }
    return pairs;
}

std::vector<ClusterSpan> detect_cluster(std::span<const double> values, double rel_gap_tol)
{
    std::vector<ClusterSpan> spans;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) {
            const double scale = std::max(std::abs(values[i]), std::numeric_limits<double>::min());
            if ((values[i] - values[i - 1]) / scale < rel_gap_tol) {
                ++spans.back().size;
                continue;
            }
        }
        spans.push_back({static_cast<int>(i), 1});
    }
    return spans;
}

EigenCluster make_cluster(const std::vector<EigenPair>& pairs, ClusterSpan span, int cluster_index)
{
    if (span.first < 0 || span.size < 1 || span.first + span.size > static_cast<int>(pairs.size()))
        throw Error("make_cluster: span outside the computed spectrum");
    EigenCluster c;
    c.cluster_index = cluster_index;
    c.first = span.first;
    for (int i = span.first; i < span.first + span.size; ++i) {
        c.values.push_back(pairs[i].value);
        c.vectors.push_back(pairs[i].vector);
    }
    return c;
}

void m_orthonormalize(std::vector<std::vector<double>>& vectors, const SparseSym& mass)
{
    std::vector<std::vector<double>> mv;
    for (auto& v : vectors) {
        for (std::size_t i = 0; i < mv.size(); ++i) axpy(-dot(mv[i], v), vectors[i], v);
        std::vector<double> m = mass.multiply(v);
        const double norm2 = dot(v, m);
        if (!(norm2 > 0.0)) throw Error("m_orthonormalize: linearly dependent vectors");
        const double s = 1.0 / std::sqrt(norm2);
        for (double& x : v) x *= s;
        for (double& x : m) x *= s;
        mv.push_back(std::move(m));
    }
}

EigenCluster recombine(const EigenCluster& cluster, const Eigen::MatrixXd& q)
{
    const int size = cluster.q();
    if (q.rows() != size || q.cols() != size) throw Error("recombine: matrix size does not match the cluster");
    EigenCluster out = cluster;
    const std::size_t n = cluster.vectors.front().size();
    for (int m = 0; m < size; ++m) {
        std::vector<double> v(n, 0.0);
        double value = 0.0;
        for (int l = 0; l < size; ++l) {
            axpy(q(l, m), cluster.vectors[l], v);
            value += q(l, m) * q(l, m) * cluster.values[l];
        }
        out.vectors[m] = std::move(v);
        out.values[m] = value;
    }
    return out;
}

Eigen::MatrixXd random_orthogonal(int q, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd a(q, q);
    for (int i = 0; i < q; ++i)
        for (int j = 0; j < q; ++j) a(i, j) = normal(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd result = qr.householderQ() * Eigen::MatrixXd::Identity(q, q);
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < q; ++j)
        if (r(j, j) < 0.0) result.col(j) *= -1.0;
    return result;
}

} // namespace afem
