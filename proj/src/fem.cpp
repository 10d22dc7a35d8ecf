#include "afem/fem.hpp"

#include "afem/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace afem {

const Mat2& Coefficients::A(int region) const
{
    const auto it = diffusion_by_region.find(region);
    return it == diffusion_by_region.end() ? diffusion : it->second;
}

double Coefficients::c(Point p) const
{
    if (!reaction) return 0.0;
    const double value = reaction(p);
    if (!std::isfinite(value)) throw Error("coefficients: non-finite reaction coefficient");
    if (value < 0.0) throw Error("coefficients: negative reaction coefficient");
    return value;
}

void Coefficients::validate() const
{
    auto check = [](const Mat2& a) {
        if (!std::isfinite(a.xx) || !std::isfinite(a.xy) || !std::isfinite(a.yy))
            throw Error("coefficients: non-finite diffusion tensor");
        if (a.min_eigenvalue() < kEllipticityFloor) throw Error("coefficients: diffusion tensor is not positive definite");
    };
    check(diffusion);
    for (const auto& [region, a] : diffusion_by_region) check(a);
}

ElementGeometry::ElementGeometry(const std::array<Point, 3>& c) : corners(c)
{
    area = 0.5 * cross(c[1] - c[0], c[2] - c[0]);
    const double inv = 1.0 / (2.0 * area);
    for (int i = 0; i < 3; ++i) {
        const Point& pj = c[(i + 1) % 3];
        const Point& pk = c[(i + 2) % 3];
        bary_gradients[i] = {(pj.y - pk.y) * inv, (pk.x - pj.x) * inv};
    }
}

Point ElementGeometry::map(const std::array<double, 3>& b) const
{
    return {b[0] * corners[0].x + b[1] * corners[1].x + b[2] * corners[2].x,
            b[0] * corners[0].y + b[1] * corners[1].y + b[2] * corners[2].y};
}

std::array<double, 3> ElementGeometry::barycentric(Point p) const
{
    std::array<double, 3> b{};
    const double inv = 1.0 / (2.0 * area);
    for (int i = 0; i < 3; ++i) {
        const Point& pj = corners[(i + 1) % 3];
        const Point& pk = corners[(i + 2) % 3];
        b[i] = cross(pj - p, pk - p) * inv;
    }
    return b;
}

void LocalBasis::values(const std::array<double, 3>& l, std::span<double> out) const
{
    if (degree == 1) {
        out[0] = l[0];
        out[1] = l[1];
        out[2] = l[2];
        return;
    }
    for (int i = 0; i < 3; ++i) {
        out[i] = l[i] * (2.0 * l[i] - 1.0);
        out[3 + i] = 4.0 * l[(i + 1) % 3] * l[(i + 2) % 3];
    }
}

void LocalBasis::gradients(const ElementGeometry& g, const std::array<double, 3>& l, std::span<Vec2> out) const
{
    const auto& d = g.bary_gradients;
    if (degree == 1) {
        out[0] = d[0];
        out[1] = d[1];
        out[2] = d[2];
        return;
    }
    for (int i = 0; i < 3; ++i) {
        const int j = (i + 1) % 3;
        const int k = (i + 2) % 3;
        out[i] = (4.0 * l[i] - 1.0) * d[i];
        out[3 + i] = 4.0 * (l[j] * d[k] + l[k] * d[j]);
    }
}

void LocalBasis::hessians(const ElementGeometry& g, std::span<Hessian> out) const
{
    if (degree == 1) {
        for (int i = 0; i < 3; ++i) out[i] = {0.0, 0.0, 0.0};
        return;
    }
    const auto& d = g.bary_gradients;
    for (int i = 0; i < 3; ++i) {
        const Vec2& a = d[i];
        out[i] = {4.0 * a.x * a.x, 4.0 * a.x * a.y, 4.0 * a.y * a.y};
        const Vec2& p = d[(i + 1) % 3];
        const Vec2& q = d[(i + 2) % 3];
        out[3 + i] = {8.0 * p.x * q.x, 4.0 * (p.x * q.y + p.y * q.x), 8.0 * p.y * q.y};
    }
}

FeSpace::FeSpace(const Mesh& mesh, int degree) : mesh_(&mesh), degree_(degree)
{
    if (degree != 1 && degree != 2) throw Error("fe space: degree must be 1 or 2");
    const int nv = mesh.num_vertices();
    const int nt = mesh.num_elements();
    const int per = dofs_per_element();

    dof_points_ = mesh.vertices();
    if (degree == 2) {
        for (int e = 0; e < mesh.num_edges(); ++e) {
            const auto& ab = mesh.edge_vertices(e);
            dof_points_.push_back(0.5 * (mesh.vertex(ab[0]) + mesh.vertex(ab[1])));
        }
    }

    element_dofs_.resize(static_cast<std::size_t>(nt) * per);
    for (int t = 0; t < nt; ++t) {
        int* dofs = element_dofs_.data() + static_cast<std::size_t>(t) * per;
        for (int i = 0; i < 3; ++i) dofs[i] = mesh.element(t).vertices[i];
        if (degree == 2)
            for (int i = 0; i < 3; ++i) dofs[3 + i] = nv + mesh.element_edge(t, i);
    }

    std::vector<char> constrained(dof_points_.size(), 0);
    for (int e = 0; e < mesh.num_edges(); ++e) {
        if (mesh.edge_marker(e) == 0) continue;
        const auto& ab = mesh.edge_vertices(e);
        constrained[ab[0]] = 1;
        constrained[ab[1]] = 1;
        if (degree == 2) constrained[nv + e] = 1;
    }
    free_index_.assign(dof_points_.size(), -1);
    for (std::size_t i = 0; i < dof_points_.size(); ++i) {
        if (constrained[i]) {
            dirichlet_dofs_.push_back(static_cast<int>(i));
        } else {
            free_index_[i] = num_free_++;
        }
    }
}

std::vector<double> FeSpace::expand(std::span<const double> vector) const
{
    if (static_cast<int>(vector.size()) == num_dofs()) return {vector.begin(), vector.end()};
    if (static_cast<int>(vector.size()) != num_free_) throw Error("fe space: vector length matches neither free nor full dofs");
    std::vector<double> full(num_dofs(), 0.0);
    for (int i = 0; i < num_dofs(); ++i)
        if (free_index_[i] >= 0) full[i] = vector[free_index_[i]];
    return full;
}

std::vector<double> FeSpace::restrict_to_free(std::span<const double> full) const
{
    if (static_cast<int>(full.size()) != num_dofs()) throw Error("fe space: expected a full-length vector");
    std::vector<double> out(num_free_);
    for (int i = 0; i < num_dofs(); ++i)
        if (free_index_[i] >= 0) out[free_index_[i]] = full[i];
    return out;
}

namespace {

template <typename LocalKernel>
SparseSym assemble(const FeSpace& space, Constraint constraint, LocalKernel&& kernel)
{
    const Mesh& mesh = space.mesh();
    const int per = space.dofs_per_element();
    const bool eliminate = constraint == Constraint::eliminate;
    const int n = eliminate ? space.num_free() : space.num_dofs();
    std::vector<SparseSym::Triplet> triplets;
    triplets.reserve(static_cast<std::size_t>(mesh.num_elements()) * per * per);
    std::vector<double> local(per * per);
    for (int t = 0; t < mesh.num_elements(); ++t) {
        std::fill(local.begin(), local.end(), 0.0);
        kernel(t, std::span<double>(local));
        const auto dofs = space.element_dofs(t);
        for (int a = 0; a < per; ++a) {
            const int row = eliminate ? space.free_index(dofs[a]) : dofs[a];
            if (row < 0) continue;
            for (int b = 0; b < per; ++b) {
                const int col = eliminate ? space.free_index(dofs[b]) : dofs[b];
                if (col < 0) continue;
                triplets.push_back({row, col, local[a * per + b]});
            }
        }
    }
    return SparseSym::from_triplets(n, std::move(triplets));
}

} // namespace

SparseSym assemble_stiffness(const FeSpace& space, const Coefficients& coeffs, Constraint constraint)
{
    coeffs.validate();
    const Mesh& mesh = space.mesh();
    const LocalBasis basis = space.basis();
    const int per = basis.size();
    const int k = space.degree();
    const auto& grad_rule = triangle_rule(2 * k);
    const auto& reaction_rule = triangle_rule(2 * k + 2);
    std::array<Vec2, 6> grads{};
    std::array<double, 6> vals{};
    return assemble(space, constraint, [&](int t, std::span<double> local) {
        const ElementGeometry g(mesh.corners(t));
        const Mat2& a = coeffs.A(mesh.element(t).region);
        for (const auto& q : grad_rule) {
            basis.gradients(g, q.bary, grads);
            const double w = q.weight * g.area;
            for (int i = 0; i < per; ++i) {
                const Vec2 ag = a * grads[i];
                for (int j = 0; j < per; ++j) local[i * per + j] += w * dot(ag, grads[j]);
            }
        }
        if (coeffs.reaction) {
            for (const auto& q : reaction_rule) {
                basis.values(q.bary, vals);
                const double w = q.weight * g.area * coeffs.c(g.map(q.bary));
                for (int i = 0; i < per; ++i)
                    for (int j = 0; j < per; ++j) local[i * per + j] += w * vals[i] * vals[j];
            }
        }
    });
}

SparseSym assemble_mass(const FeSpace& space, Constraint constraint)
{
    const Mesh& mesh = space.mesh();
    const LocalBasis basis = space.basis();
    const int per = basis.size();
    const auto& rule = triangle_rule(2 * space.degree());
    std::array<double, 6> vals{};
    return assemble(space, constraint, [&](int t, std::span<double> local) {
        const double area = mesh.area(t);
        for (const auto& q : rule) {
            basis.values(q.bary, vals);
            const double w = q.weight * area;
            for (int i = 0; i < per; ++i)
                for (int j = 0; j < per; ++j) local[i * per + j] += w * vals[i] * vals[j];
        }
    });
}

std::vector<double> assemble_load(const FeSpace& space, const ScalarField& f)
{
    const Mesh& mesh = space.mesh();
    const LocalBasis basis = space.basis();
    const int per = basis.size();
    const auto& rule = triangle_rule(2 * space.degree() + 2);
    std::vector<double> load(space.num_free(), 0.0);
    std::array<double, 6> vals{};
    for (int t = 0; t < mesh.num_elements(); ++t) {
        const ElementGeometry g(mesh.corners(t));
        const auto dofs = space.element_dofs(t);
        for (const auto& q : rule) {
            basis.values(q.bary, vals);
            const double w = q.weight * g.area * f(g.map(q.bary));
            for (int i = 0; i < per; ++i) {
                const int row = space.free_index(dofs[i]);
                if (row >= 0) load[row] += w * vals[i];
            }
        }
    }
    return load;
}

double evaluate_on_element(const FeSpace& space, std::span<const double> full, int t,
                           const std::array<double, 3>& bary, Vec2* gradient)
{
    const LocalBasis basis = space.basis();
    const auto dofs = space.element_dofs(t);
    std::array<double, 6> vals{};
    basis.values(bary, vals);
    double value = 0.0;
    for (int i = 0; i < basis.size(); ++i) value += full[dofs[i]] * vals[i];
    if (gradient) {
        const ElementGeometry g(space.mesh().corners(t));
        std::array<Vec2, 6> grads{};
        basis.gradients(g, bary, grads);
        Vec2 sum{};
        for (int i = 0; i < basis.size(); ++i) sum = sum + full[dofs[i]] * grads[i];
        *gradient = sum;
    }
    return value;
}

int locate(const Mesh& mesh, Point p, int hint)
{
    constexpr double kTol = 1e-12;
    const int nt = mesh.num_elements();
    int t = (hint >= 0 && hint < nt) ? hint : 0;
    for (int step = 0; step < nt; ++step) {
        const ElementGeometry g(mesh.corners(t));
        const auto b = g.barycentric(p);
        const int worst = static_cast<int>(std::min_element(b.begin(), b.end()) - b.begin());
        if (b[worst] >= -kTol) return t;
        const int next = mesh.neighbor(t, worst);
        if (next < 0) break;
        t = next;
    }
    // The walk can stall at a reentrant corner.
    for (int s = 0; s < nt; ++s) {
        const ElementGeometry g(mesh.corners(s));
        const auto b = g.barycentric(p);
        if (*std::min_element(b.begin(), b.end()) >= -kTol) return s;
    }
    return -1;
}

std::vector<PointEvaluation> evaluate(const FeSpace& space, std::span<const double> vector,
                                      std::span<const Point> points)
{
    const std::vector<double> full = space.expand(vector);
    std::vector<PointEvaluation> out(points.size());
    int hint = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const int t = locate(space.mesh(), points[i], hint);
        if (t < 0) continue;
        hint = t;
        const ElementGeometry g(space.mesh().corners(t));
        auto& r = out[i];
        r.inside = true;
        r.element = t;
        r.value = evaluate_on_element(space, full, t, g.barycentric(points[i]), &r.gradient);
    }
    return out;
}

std::vector<double> interpolate(const FeSpace& space, const ScalarField& f)
{
    std::vector<double> out(space.num_dofs());
    for (int i = 0; i < space.num_dofs(); ++i) out[i] = f(space.dof_point(i));
    return out;
}

namespace {

double checked_sqrt(double value, double scale, const char* what)
{
    if (value >= 0.0) return std::sqrt(value);
    if (value >= -1e-12 * std::max(scale, 1.0)) return 0.0;
    throw Error(std::string(what) + ": negative quadratic form, matrix is not positive definite");
}

} // namespace

double energy_norm(const SparseSym& stiffness, std::span<const double> x)
{
    if (static_cast<int>(x.size()) != stiffness.dimension()) throw Error("energy_norm: dimension mismatch");
    return checked_sqrt(stiffness.quadratic_form(x), dot(x, x), "energy_norm");
}

double b_norm(const SparseSym& mass, std::span<const double> x)
{
    if (static_cast<int>(x.size()) != mass.dimension()) throw Error("b_norm: dimension mismatch");
    return checked_sqrt(mass.quadratic_form(x), dot(x, x), "b_norm");
}

double energy_norm(const FeSpace& space, const Coefficients& coeffs, std::span<const double> x)
{
    const bool free = static_cast<int>(x.size()) == space.num_free();
    return energy_norm(assemble_stiffness(space, coeffs, free ? Constraint::eliminate : Constraint::none), x);
}

double b_norm(const FeSpace& space, std::span<const double> x)
{
    const bool free = static_cast<int>(x.size()) == space.num_free();
    return b_norm(assemble_mass(space, free ? Constraint::eliminate : Constraint::none), x);
}

std::vector<double> prolongate(const FeSpace& coarse, std::span<const double> coarse_full, const FeSpace& fine,
                               std::span<const int> parent_map)
{
    const std::vector<double> source = coarse.expand(coarse_full);
    if (static_cast<int>(parent_map.size()) != fine.mesh().num_elements())
        throw Error("prolongate: parent map does not match the fine mesh");
    std::vector<double> out(fine.num_dofs(), 0.0);
    for (int t = 0; t < fine.mesh().num_elements(); ++t) {
        const int parent = parent_map[t];
        const ElementGeometry g(coarse.mesh().corners(parent));
        for (int dof : fine.element_dofs(t))
            out[dof] = evaluate_on_element(coarse, source, parent, g.barycentric(fine.dof_point(dof)));
    }
    return out;
}

} // namespace afem
