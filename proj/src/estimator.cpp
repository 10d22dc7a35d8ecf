#include "afem/estimator.hpp"

#include "afem/quadrature.hpp"

#include <fstream>
#include <iomanip>

namespace afem {

namespace {

// Volume data of component l at a quadrature point: lambda_l u or f_l(p).
using VolumeData = std::function<double(int l, Point p, double u)>;

std::vector<std::vector<double>> expand_all(const FeSpace& space, const std::vector<std::vector<double>>& vectors,
                                            const char* who)
{
    std::vector<std::vector<double>> full;
    full.reserve(vectors.size());
    for (const auto& v : vectors) {
        if (static_cast<int>(v.size()) != space.num_free() && static_cast<int>(v.size()) != space.num_dofs())
            throw Error(std::string(who) + ": vector length does not match the space");
        full.push_back(space.expand(v));
    }
    return full;
}

// Shifted Legendre polynomials on [0, 1], degree <= 2.
double legendre01(int n, double s)
{
    switch (n) {
    case 0: return 1.0;
    case 1: return 2.0 * s - 1.0;
    default: return 6.0 * s * s - 6.0 * s + 1.0;
    }
}

IndicatorField compute(const FeSpace& space, const Coefficients& coeffs,
                       const std::vector<std::vector<double>>& full, const VolumeData& data)
{
    coeffs.validate();
    const Mesh& mesh = space.mesh();
    const int nt = mesh.num_elements();
    const int k = space.degree();
    const LocalBasis basis = space.basis();
    const int nb = basis.size();
    const int nfields = static_cast<int>(full.size());

    IndicatorField out;
    out.eta2.assign(nt, 0.0);
    out.osc2.assign(nt, 0.0);
    out.jump2.assign(nt, 0.0);

    std::vector<ElementGeometry> geometry;
    geometry.reserve(nt);
    for (int t = 0; t < nt; ++t) geometry.emplace_back(mesh.corners(t));

    const auto& rule = triangle_rule(2 * k + 2);
    const int nq = static_cast<int>(rule.size());
    std::vector<std::array<double, 6>> phi(nq);
    for (int q = 0; q < nq; ++q) basis.values(rule[q].bary, phi[q]);

    std::vector<double> c_at(nq);
    std::vector<double> r(nq);
    std::array<Hessian, 6> hess{};
    for (int t = 0; t < nt; ++t) {
        const ElementGeometry& g = geometry[t];
        const auto dofs = space.element_dofs(t);
        const Mat2& a = coeffs.A(mesh.element(t).region);
        const double h = mesh.diameter(t);
        basis.hessians(g, hess);
        std::array<Point, 32> pts{};
        for (int q = 0; q < nq; ++q) {
            pts[q] = g.map(rule[q].bary);
            c_at[q] = coeffs.c(pts[q]);
        }
        double eta = 0.0;
        double osc = 0.0;
        for (int l = 0; l < nfields; ++l) {
            const auto& u = full[l];
            Hessian hu{0.0, 0.0, 0.0};
            for (int i = 0; i < nb; ++i) {
                hu.xx += u[dofs[i]] * hess[i].xx;
                hu.xy += u[dofs[i]] * hess[i].xy;
                hu.yy += u[dofs[i]] * hess[i].yy;
            }
            const double div = contract(a, hu);
            double norm2 = 0.0;
            std::array<double, 3> moments{};
            for (int q = 0; q < nq; ++q) {
                double uq = 0.0;
                for (int i = 0; i < nb; ++i) uq += u[dofs[i]] * phi[q][i];
                r[q] = data(l, pts[q], uq) + div - c_at[q] * uq;
                norm2 += rule[q].weight * r[q] * r[q];
                for (int i = 0; i < 3; ++i) moments[i] += rule[q].weight * r[q] * rule[q].bary[i];
            }
            // L2 projection onto P_{k-1}(T) in barycentric form.
            std::array<double, 3> proj{};
            if (k == 1) {
                const double mean = moments[0] + moments[1] + moments[2];
                proj = {mean, mean, mean};
            } else {
                for (int i = 0; i < 3; ++i)
                    proj[i] = 3.0 * (3.0 * moments[i] - moments[(i + 1) % 3] - moments[(i + 2) % 3]);
            }
            double rest2 = 0.0;
            for (int q = 0; q < nq; ++q) {
                const double pr = proj[0] * rule[q].bary[0] + proj[1] * rule[q].bary[1] + proj[2] * rule[q].bary[2];
                rest2 += rule[q].weight * (r[q] - pr) * (r[q] - pr);
            }
            eta += h * h * g.area * norm2;
            osc += h * h * g.area * rest2;
        }
        out.eta2[t] = eta;
        out.osc2[t] = osc;
    }

    const auto& line = line_rule(2 * k + 2);
    const int nl = static_cast<int>(line.size());
    std::vector<double> jump(nl);
    std::array<Vec2, 6> grads{};
    for (int e = 0; e < mesh.num_edges(); ++e) {
        if (mesh.is_boundary_edge(e)) continue;
        const auto& ab = mesh.edge_vertices(e);
        const Point pa = mesh.vertex(ab[0]);
        const Point pb = mesh.vertex(ab[1]);
        const double len = mesh.edge_length(e);
        const Vec2 normal{(pb.y - pa.y) / len, -(pb.x - pa.x) / len};
        const auto& owners = mesh.edge_elements(e);

        // Barycentric coordinates of the edge endpoints in each owner.
        std::array<std::array<int, 2>, 2> local{};
        for (int side = 0; side < 2; ++side) {
            const auto& v = mesh.element(owners[side]).vertices;
            for (int i = 0; i < 3; ++i) {
                if (v[i] == ab[0]) local[side][0] = i;
                if (v[i] == ab[1]) local[side][1] = i;
            }
        }

        double eta = 0.0;
        double osc = 0.0;
        for (int l = 0; l < nfields; ++l) {
            const auto& u = full[l];
            for (int q = 0; q < nl; ++q) {
                double flux[2];
                for (int side = 0; side < 2; ++side) {
                    const int t = owners[side];
                    std::array<double, 3> bary{};
                    bary[local[side][0]] = 1.0 - line[q].s;
                    bary[local[side][1]] = line[q].s;
                    basis.gradients(geometry[t], bary, grads);
                    Vec2 gu{};
                    const auto dofs = space.element_dofs(t);
                    for (int i = 0; i < nb; ++i) gu = gu + u[dofs[i]] * grads[i];
                    flux[side] = dot(coeffs.A(mesh.element(t).region) * gu, normal);
                }
                jump[q] = flux[0] - flux[1];
            }
            double norm2 = 0.0;
            std::array<double, 3> coef{};
            for (int q = 0; q < nl; ++q) {
                norm2 += line[q].weight * jump[q] * jump[q];
                for (int n = 0; n <= k; ++n) coef[n] += (2 * n + 1) * line[q].weight * jump[q] * legendre01(n, line[q].s);
            }
            double rest2 = 0.0;
            for (int q = 0; q < nl; ++q) {
                double pr = 0.0;
                for (int n = 0; n <= k; ++n) pr += coef[n] * legendre01(n, line[q].s);
                rest2 += line[q].weight * (jump[q] - pr) * (jump[q] - pr);
            }
            eta += len * len * norm2;
            osc += len * len * rest2;
        }
        for (int side = 0; side < 2; ++side) {
            out.jump2[owners[side]] += eta;
            out.eta2[owners[side]] += eta;
            out.osc2[owners[side]] += osc;
        }
    }

    for (int t = 0; t < nt; ++t) {
        out.total_eta2 += out.eta2[t];
        out.total_osc2 += out.osc2[t];
    }
    return out;
}

} // namespace

void IndicatorField::write_csv(const std::string& path) const
{
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path + " for writing");
    os << "element_id,eta2,osc2\n" << std::setprecision(17);
    for (int t = 0; t < size(); ++t) os << t << ',' << eta2[t] << ',' << osc2[t] << '\n';
    if (!os) throw Error("write failed: " + path);
}

IndicatorField eigen_indicators(const FeSpace& space, const Coefficients& coeffs, const EigenCluster& cluster)
{
    if (cluster.vectors.size() != cluster.values.size() || cluster.values.empty())
        throw Error("eigen_indicators: malformed cluster");
    const auto full = expand_all(space, cluster.vectors, "eigen_indicators");
    const auto& values = cluster.values;
    return compute(space, coeffs, full, [&](int l, Point, double u) { return values[l] * u; });
}

IndicatorField source_indicators(const FeSpace& space, const Coefficients& coeffs,
                                 const std::vector<std::vector<double>>& solutions,
                                 const std::vector<ScalarField>& sources)
{
    if (solutions.size() != sources.size())
        throw Error("source_indicators: " + std::to_string(solutions.size()) + " solutions but " +
                    std::to_string(sources.size()) + " sources");
    const auto full = expand_all(space, solutions, "source_indicators");
    return compute(space, coeffs, full, [&](int l, Point p, double) { return sources[l] ? sources[l](p) : 0.0; });
}

std::vector<double> patch_h1_norms(const FeSpace& space, const std::vector<std::vector<double>>& fields)
{
    const Mesh& mesh = space.mesh();
    const auto full = expand_all(space, fields, "patch_h1_norms");
    const LocalBasis basis = space.basis();
    const int nb = basis.size();
    const auto& rule = triangle_rule(2 * space.degree());
    std::vector<double> local(mesh.num_elements(), 0.0);
    std::array<double, 6> phi{};
    std::array<Vec2, 6> grads{};
    for (int t = 0; t < mesh.num_elements(); ++t) {
        const ElementGeometry g(mesh.corners(t));
        const auto dofs = space.element_dofs(t);
        double sum = 0.0;
        for (const auto& qp : rule) {
            basis.values(qp.bary, phi);
            basis.gradients(g, qp.bary, grads);
            for (const auto& u : full) {
                double v = 0.0;
                Vec2 gv{};
                for (int i = 0; i < nb; ++i) {
                    v += u[dofs[i]] * phi[i];
                    gv = gv + u[dofs[i]] * grads[i];
                }
                sum += qp.weight * (v * v + dot(gv, gv));
            }
        }
        local[t] = sum * g.area;
    }
    std::vector<double> out(mesh.num_elements());
    for (int t = 0; t < mesh.num_elements(); ++t) {
        double sum = 0.0;
        for (int s : mesh.element_patch(t)) sum += local[s];
        out[t] = std::sqrt(sum);
    }
    return out;
}

std::vector<double> oscillation_lipschitz_check(const FeSpace& space, const Coefficients& coeffs,
                                                const std::vector<std::vector<double>>& v,
                                                const std::vector<std::vector<double>>& w, double c_est,
                                                const std::vector<ScalarField>& sources)
{
    if (v.size() != w.size()) throw Error("oscillation_lipschitz_check: V and W differ in size");
    std::vector<ScalarField> data = sources;
    if (data.empty()) data.resize(v.size());
    if (data.size() != v.size()) throw Error("oscillation_lipschitz_check: one source per component required");

    const auto fv = source_indicators(space, coeffs, v, data);
    const auto fw = source_indicators(space, coeffs, w, data);
    std::vector<std::vector<double>> diff = expand_all(space, v, "oscillation_lipschitz_check");
    const auto wf = expand_all(space, w, "oscillation_lipschitz_check");
    for (std::size_t i = 0; i < diff.size(); ++i)
        for (std::size_t j = 0; j < diff[i].size(); ++j) diff[i][j] -= wf[i][j];
    const auto norms = patch_h1_norms(space, diff);

    std::vector<double> slack(fv.size());
    for (int t = 0; t < fv.size(); ++t)
        slack[t] = std::sqrt(fv.osc2[t]) - std::sqrt(fw.osc2[t]) - c_est * norms[t];
    return slack;
}

double oscillation_ratio(const FeSpace& space, const Coefficients& coeffs, const std::vector<std::vector<double>>& v)
{
    const auto field = source_indicators(space, coeffs, v, std::vector<ScalarField>(v.size()));
    const auto norms = patch_h1_norms(space, v);
    double ratio = 0.0;
    for (int t = 0; t < field.size(); ++t)
        if (norms[t] > 0.0) ratio = std::max(ratio, std::sqrt(field.osc2[t]) / norms[t]);
    return ratio;
}

} // namespace afem
