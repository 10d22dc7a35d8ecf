#pragma once

#include "afem/sparse.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace afem {

struct EigenPair
{
    double value;
    std::vector<double> vector;
};

struct EigenOptions
{
    /// Exit threshold on ||K v - lambda M v||_{K^-1} / sqrt(lambda v^T M v)
    /// for every wanted pair. Relative eigenvalue errors are of its square.
    double tol = 1e-10;
    /// Krylov block width; must cover the largest multiplicity sought.
    int block_size = 4;
    int max_restarts = 200;
    std::uint64_t seed = 0x5eed;
    /// Pencils up to this size are solved densely.
    int dense_threshold = 64;
};

/**
 * The nev smallest eigenpairs of K x = lambda M x (K, M SPD), ascending,
 * with M-orthonormal vectors.
 *
 * Block shift-invert Lanczos at sigma = 0: the Krylov space of K^{-1} M is
 * built in the M inner product with full reorthogonalization, Rayleigh-Ritz
 * is applied to the pencil itself, and the search restarts from the wanted
 * Ritz vectors when the basis is full.
 */
std::vector<EigenPair> solve_smallest(const SparseSym& stiffness, const SparseSym& mass, int nev,
                                      const EigenOptions& options = {});

/// A contiguous run of the ascending spectrum.
struct ClusterSpan
{
    int first;
    int size;
};

/// Maximal runs with consecutive relative gaps (l_{i+1} - l_i) / l_{i+1}
/// below rel_gap_tol.
std::vector<ClusterSpan> detect_cluster(std::span<const double> values, double rel_gap_tol = 1e-3);

/// Discrete eigenvalues approximating one exact eigenvalue of multiplicity q.
struct EigenCluster
{
    std::vector<double> values;
    /// Free-dof coefficient vectors, M-orthonormal.
    std::vector<std::vector<double>> vectors;
    /// 1-based position among distinct eigenvalues.
    int cluster_index = 1;
    /// 0-based position of the first member in the ascending spectrum.
    int first = 0;

    int q() const { return static_cast<int>(values.size()); }
};

EigenCluster make_cluster(const std::vector<EigenPair>& pairs, ClusterSpan span, int cluster_index);

/// Modified Gram-Schmidt in the M inner product, in place.
void m_orthonormalize(std::vector<std::vector<double>>& vectors, const SparseSym& mass);

/// Replaces the basis by vectors * Q for an orthogonal q x q matrix Q. The
/// new values are the Rayleigh quotients sum_l Q_lm^2 lambda_l.
EigenCluster recombine(const EigenCluster& cluster, const Eigen::MatrixXd& q);

/// Deterministic random orthogonal matrix (QR of a Gaussian sample).
Eigen::MatrixXd random_orthogonal(int q, std::uint64_t seed);

} // namespace afem
