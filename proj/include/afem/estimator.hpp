#pragma once

#include "afem/eigsolve.hpp"
#include "afem/fem.hpp"

#include <string>
#include <vector>

namespace afem {

/**
 * Per-element residual indicators and oscillations.
 *
 * eta2[T] = h_T^2 ||R_T||^2 + sum over interior edges E of T of h_E ||J_E||^2,
 * summed over all members of a cluster (or all components of a source
 * problem). Each interior edge counts fully in both neighbors.
 */
struct IndicatorField
{
    std::vector<double> eta2;
    std::vector<double> osc2;
    /// Edge part of eta2.
    std::vector<double> jump2;
    double total_eta2 = 0.0;
    double total_osc2 = 0.0;

    int size() const { return static_cast<int>(eta2.size()); }

    /// Columns element_id, eta2, osc2.
    void write_csv(const std::string& path) const;
};

/// Indicators of the residuals lambda_l u_l + div(A grad u_l) - c u_l.
IndicatorField eigen_indicators(const FeSpace& space, const Coefficients& coeffs, const EigenCluster& cluster);

/// Indicators of f_i + div(A grad u_i) - c u_i. Vectors may be free or full.
IndicatorField source_indicators(const FeSpace& space, const Coefficients& coeffs,
                                 const std::vector<std::vector<double>>& solutions,
                                 const std::vector<ScalarField>& sources);

/// H^1 norm of a field restricted to the patch of every element.
std::vector<double> patch_h1_norms(const FeSpace& space, const std::vector<std::vector<double>>& fields);

/**
 * osc(V, T) - osc(W, T) - c_est ||V - W||_{1, omega_T} per element, for the
 * source residual with data `sources` (empty means zero data).
 */
std::vector<double> oscillation_lipschitz_check(const FeSpace& space, const Coefficients& coeffs,
                                                const std::vector<std::vector<double>>& v,
                                                const std::vector<std::vector<double>>& w, double c_est,
                                                const std::vector<ScalarField>& sources = {});

/// max over elements of osc(V, T) / ||V||_{1, omega_T}, a lower bound for
/// the constant of the inverse estimate on this mesh.
double oscillation_ratio(const FeSpace& space, const Coefficients& coeffs,
                         const std::vector<std::vector<double>>& v);

} // namespace afem
