#pragma once

#include "afem/fem.hpp"
#include "afem/gap.hpp"
#include "afem/mesh.hpp"

#include <optional>
#include <string>
#include <vector>

namespace afem {

struct ReferenceValue
{
    /// 1-based position in the ascending spectrum.
    int index;
    double value;
    std::string note;
};

/// An exact eigenspace together with its 1-based cluster position.
struct ExactCluster
{
    int cluster_index;
    ExactEigenspace space;
};

struct ProblemSpec
{
    std::string name;
    /// Coarse mesh before pre-refinement.
    Mesh initial_mesh;
    /// Uniform refinement rounds applied before the adaptive loop.
    int pre_refinements = 3;
    Coefficients coefficients;
    std::vector<ExactCluster> exact_clusters;
    std::vector<ReferenceValue> reference_values;

    Mesh starting_mesh() const { return refine_uniform(initial_mesh, pre_refinements); }
    const ExactEigenspace* exact_cluster(int cluster_index) const;
    std::optional<double> reference_value(int index) const;
};

/// -Laplace on (0,1)^2; lambda = pi^2 (m^2 + n^2).
ProblemSpec square_laplace();

/// -1/2 Laplace + |x|^2 / 2 on (-w, w)^2; lambda = n_x + n_y + 1.
ProblemSpec harmonic_oscillator(double box_half_width = 5.5);

/// -Laplace on (-1,1)^2 minus [0,1]x[-1,0].
ProblemSpec lshape_laplace();

/// First Dirichlet eigenvalue of the L-shape from a P2 adaptive reference run.
inline constexpr double kLshapeLambda1 = 9.6397238440219;

/**
 * Problem from a JSON file:
 *   {"name": ..., "mesh": "mesh.json" | {inline mesh},
 *    "diffusion": a | [axx, axy, ayy],
 *    "reaction": {"type": "constant", "value": c}
 *              | {"type": "polynomial", "terms": [[coef, px, py], ...]}
 *              | {"type": "radial", "coefficients": [c0, c2, c4, ...]},
 *    "pre_refinements": 3, "reference_values": [[index, value], ...]}
 * Radial coefficients multiply |x|^0, |x|^2, |x|^4, ...
 */
ProblemSpec load_problem(const std::string& path);

/// Named built-in problem or "file:<path>".
ProblemSpec problem_by_name(const std::string& name);

/// Normalized Hermite function (2^n n! sqrt(pi))^{-1/2} H_n(x) e^{-x^2/2}
/// and its derivative.
double hermite_function(int n, double x);
double hermite_function_derivative(int n, double x);

} // namespace afem
