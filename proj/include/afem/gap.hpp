#pragma once

#include "afem/eigsolve.hpp"
#include "afem/fem.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

namespace afem {

/// Closed-form function with its gradient.
struct ExactFunction
{
    std::function<double(Point)> value;
    std::function<Vec2(Point)> gradient;
};

/// Analytic eigenvalue with a basis of its eigenspace.
struct ExactEigenspace
{
    double value = 0.0;
    std::vector<ExactFunction> basis;
    /// The basis is b-orthonormal on the whole space (it may not be on a
    /// truncated domain).
    bool b_orthonormal = true;

    int q() const { return static_cast<int>(basis.size()); }
};

/**
 * Gram matrices behind the gap, all integrated with one rule:
 *   G = a(u_i, u_j), P = a(u_i, v_l), S = a(v_l, v_m),
 *   BX = b(u_i, u_j), BY = b(v_l, v_m)
 * with u exact and v discrete.
 */
struct GapGrams
{
    Eigen::MatrixXd g, p, s, bx, by;
};

struct GapOptions
{
    /// Each element is split into n^2 congruent pieces before integrating
    /// with the degree 2k+2 rule.
    int subdivision = 2;
};

GapGrams gap_grams(const ExactEigenspace& exact, const EigenCluster& discrete, const FeSpace& space,
                   const Coefficients& coeffs, const GapOptions& options = {});

/// sup over b-unit x in span(u) of inf over span(v) of the a-distance, from
/// the Gram matrices: sqrt(lambda_max(G - P S^-1 P^T, BX)).
double directed_distance(const Eigen::MatrixXd& g, const Eigen::MatrixXd& p, const Eigen::MatrixXd& s,
                         const Eigen::MatrixXd& bx);

/// d(M(lambda), M_h(lambda)).
double directed_distance(const ExactEigenspace& exact, const EigenCluster& discrete, const FeSpace& space,
                         const Coefficients& coeffs, const GapOptions& options = {});

struct GapResult
{
    /// d(exact, discrete).
    double forward = 0.0;
    /// d(discrete, exact).
    double reverse = 0.0;
    double gap() const { return std::max(forward, reverse); }
};

GapResult gap_measures(const GapGrams& grams);
GapResult gap_measures(const ExactEigenspace& exact, const EigenCluster& discrete, const FeSpace& space,
                       const Coefficients& coeffs, const GapOptions& options = {});

/// max of the two directed distances.
double gap_energy(const ExactEigenspace& exact, const EigenCluster& discrete, const FeSpace& space,
                  const Coefficients& coeffs, const GapOptions& options = {});

/// Monte-Carlo lower bound for the forward distance: uniform samples on the
/// b-unit sphere of the exact space, each projected exactly.
double brute_force_distance(const GapGrams& grams, int n_samples, std::uint64_t seed = 1);
double brute_force_distance(const ExactEigenspace& exact, const EigenCluster& discrete, const FeSpace& space,
                            const Coefficients& coeffs, int n_samples, std::uint64_t seed = 1,
                            const GapOptions& options = {});

/// a(u - u_h, u - u_h) summed over components, integrated like the gap.
double energy_error_squared(const FeSpace& space, const Coefficients& coeffs,
                            const std::vector<ExactFunction>& exact, const std::vector<std::vector<double>>& discrete,
                            const GapOptions& options = {});

} // namespace afem
