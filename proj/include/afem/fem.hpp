#pragma once

#include "afem/mesh.hpp"
#include "afem/sparse.hpp"

#include <functional>
#include <map>
#include <span>
#include <vector>

namespace afem {

using ScalarField = std::function<double(Point)>;

/**
 * Coefficients of a(u, v) = (A grad u, grad v) + (c u, v).
 *
 * A is constant per region tag; regions without an entry use `diffusion`.
 * An empty `reaction` means c = 0.
 */
struct Coefficients
{
    Mat2 diffusion = Mat2::scaled_identity(1.0);
    std::map<int, Mat2> diffusion_by_region;
    ScalarField reaction;

    static constexpr double kEllipticityFloor = 1e-12;

    const Mat2& A(int region) const;
    double c(Point p) const;

    /// Throws if some A is not SPD or non-finite.
    void validate() const;
};

/// Affine map data of one triangle.
struct ElementGeometry
{
    std::array<Point, 3> corners;
    std::array<Vec2, 3> bary_gradients;
    double area;

    explicit ElementGeometry(const std::array<Point, 3>& c);
    Point map(const std::array<double, 3>& bary) const;
    std::array<double, 3> barycentric(Point p) const;
};

/// Lagrange basis of degree 1 or 2 on one element. Local dofs are the three
/// vertices followed (for k = 2) by the midpoints of local edges 0, 1, 2.
struct LocalBasis
{
    int degree;
    int size() const { return degree == 1 ? 3 : 6; }

    void values(const std::array<double, 3>& bary, std::span<double> out) const;
    void gradients(const ElementGeometry& g, const std::array<double, 3>& bary, std::span<Vec2> out) const;
    /// Constant on the element.
    void hessians(const ElementGeometry& g, std::span<Hessian> out) const;
};

/**
 * Continuous Lagrange space of degree 1 or 2. Keeps a reference to the mesh,
 * which must outlive the space.
 */
class FeSpace
{
public:
    FeSpace(const Mesh& mesh, int degree);

    const Mesh& mesh() const { return *mesh_; }
    int degree() const { return degree_; }
    LocalBasis basis() const { return LocalBasis{degree_}; }
    int dofs_per_element() const { return degree_ == 1 ? 3 : 6; }

    int num_dofs() const { return static_cast<int>(dof_points_.size()); }
    int num_free() const { return num_free_; }

    std::span<const int> element_dofs(int t) const
    {
        return {element_dofs_.data() + static_cast<std::size_t>(t) * dofs_per_element(),
                static_cast<std::size_t>(dofs_per_element())};
    }
    Point dof_point(int i) const { return dof_points_[i]; }
    bool is_dirichlet(int i) const { return free_index_[i] < 0; }
    /// -1 for Dirichlet dofs.
    int free_index(int i) const { return free_index_[i]; }
    const std::vector<int>& dirichlet_dofs() const { return dirichlet_dofs_; }

    /// Free-dof vector -> full vector with zeros on Dirichlet dofs. Full
    /// vectors pass through unchanged.
    std::vector<double> expand(std::span<const double> vector) const;
    /// Full vector -> free-dof part.
    std::vector<double> restrict_to_free(std::span<const double> full) const;

private:
    const Mesh* mesh_;
    int degree_;
    int num_free_ = 0;
    std::vector<int> element_dofs_;
    std::vector<Point> dof_points_;
    std::vector<int> free_index_;
    std::vector<int> dirichlet_dofs_;
};

enum class Constraint
{
    /// Rows and columns of Dirichlet dofs removed; dimension num_free().
    eliminate,
    /// Full matrix on all dofs.
    none,
};

SparseSym assemble_stiffness(const FeSpace& space, const Coefficients& coeffs,
                             Constraint constraint = Constraint::eliminate);
SparseSym assemble_mass(const FeSpace& space, Constraint constraint = Constraint::eliminate);

/// Load vector (f, phi_i) over free dofs, integrated with a degree 2k+2 rule.
std::vector<double> assemble_load(const FeSpace& space, const ScalarField& f);

struct PointEvaluation
{
    bool inside = false;
    int element = -1;
    double value = 0.0;
    Vec2 gradient{};
};

/// Evaluates a free or full coefficient vector. Points are located by an
/// element walk with a linear-scan fallback; outside points are flagged.
std::vector<PointEvaluation> evaluate(const FeSpace& space, std::span<const double> vector,
                                      std::span<const Point> points);

/// Value and gradient of the field at barycentric coordinates of element t.
double evaluate_on_element(const FeSpace& space, std::span<const double> full, int t,
                           const std::array<double, 3>& bary, Vec2* gradient = nullptr);

/// Nodal interpolant on all dofs (full vector, boundary values kept).
std::vector<double> interpolate(const FeSpace& space, const ScalarField& f);

/// Locates p; returns the element id or -1. `hint` seeds the walk.
int locate(const Mesh& mesh, Point p, int hint = 0);

/// sqrt(x^T K x) and sqrt(x^T M x) on matching (free or full) vectors.
double energy_norm(const SparseSym& stiffness, std::span<const double> x);
double b_norm(const SparseSym& mass, std::span<const double> x);
double energy_norm(const FeSpace& space, const Coefficients& coeffs, std::span<const double> x);
double b_norm(const FeSpace& space, std::span<const double> x);

/// Carries a field from the mesh before refinement to the refined mesh.
/// `parent_map` is RefineResult::parent_map. Exact because the spaces nest.
std::vector<double> prolongate(const FeSpace& coarse, std::span<const double> coarse_full, const FeSpace& fine,
                               std::span<const int> parent_map);

} // namespace afem
