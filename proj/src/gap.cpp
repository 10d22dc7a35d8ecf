#include "afem/gap.hpp"

#include "afem/quadrature.hpp"

#include <random>

namespace afem {

namespace {

// Calls visit(t, bary, point, weight) for every point of the subdivided
// degree 2k+2 rule on every element; weights include the area.
template <class Visit>
void integrate(const FeSpace& space, int subdivision, Visit&& visit)
{
    if (subdivision < 1) throw Error("gap: subdivision must be >= 1");
    const Mesh& mesh = space.mesh();
    const auto& rule = triangle_rule(2 * space.degree() + 2);
    const int n = subdivision;
    const double inv = 1.0 / n;

    // Sub-triangles as barycentric corner triples.
    std::vector<std::array<std::array<double, 3>, 3>> pieces;
    auto node = [&](int i, int j) { return std::array<double, 3>{1.0 - (i + j) * inv, i * inv, j * inv}; };
    for (int i = 0; i < n; ++i)
        for (int j = 0; i + j < n; ++j) {
            pieces.push_back({node(i, j), node(i + 1, j), node(i, j + 1)});
            if (i + j <= n - 2) pieces.push_back({node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)});
        }

    for (int t = 0; t < mesh.num_elements(); ++t) {
        const ElementGeometry g(mesh.corners(t));
        const double w = g.area / static_cast<double>(pieces.size());
        for (const auto& piece : pieces)
            for (const auto& qp : rule) {
                std::array<double, 3> bary{};
                for (int c = 0; c < 3; ++c)
                    for (int d = 0; d < 3; ++d) bary[d] += qp.bary[c] * piece[c][d];
                visit(t, g, bary, g.map(bary), w * qp.weight);
            }
    }
}

struct DiscreteValue
{
    double value;
    Vec2 gradient;
};

Eigen::MatrixXd symmetric(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

// lambda_max of (G - P S^-1 P^T) relative to B.
double schur_max(const Eigen::MatrixXd& g, const Eigen::MatrixXd& p, const Eigen::MatrixXd& s,
                 const Eigen::MatrixXd& b)
{
    if (g.rows() != p.rows() || s.rows() != p.cols() || b.rows() != g.rows() || g.rows() == 0)
        throw Error("gap: Gram dimensions do not match");
    Eigen::LLT<Eigen::MatrixXd> llt(symmetric(s));
    if (llt.info() != Eigen::Success) throw Error("gap: singular Gram matrix of the projected space");
    const Eigen::MatrixXd schur = symmetric(g - p * llt.solve(p.transpose()));
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(schur, symmetric(b), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw Error("gap: b-Gram matrix is not positive definite");
    return std::max(es.eigenvalues().maxCoeff(), 0.0);
}

} // namespace

GapGrams gap_grams(const ExactEigenspace& exact, const EigenCluster& discrete, const FeSpace& space,
                   const Coefficients& coeffs, const GapOptions& options)
{
    const int qx = exact.q();
    const int qy = discrete.q();
    if (qx == 0 || qy == 0) throw Error("gap: empty space");
    if (static_cast<int>(discrete.vectors.size()) != qy) throw Error("gap: malformed cluster");
    coeffs.validate();

    std::vector<std::vector<double>> full;
    for (const auto& v : discrete.vectors) {
        if (static_cast<int>(v.size()) != space.num_free() && static_cast<int>(v.size()) != space.num_dofs())
            throw Error("gap: cluster vectors do not live on the space");
        full.push_back(space.expand(v));
    }

    GapGrams out;
    out.g = Eigen::MatrixXd::Zero(qx, qx);
    out.bx = Eigen::MatrixXd::Zero(qx, qx);
    out.p = Eigen::MatrixXd::Zero(qx, qy);
    out.s = Eigen::MatrixXd::Zero(qy, qy);
    out.by = Eigen::MatrixXd::Zero(qy, qy);

    const LocalBasis basis = space.basis();
    const int nb = basis.size();
    std::vector<DiscreteValue> u(qx), v(qy);
    std::array<double, 6> phi{};
    std::array<Vec2, 6> grads{};
    integrate(space, options.subdivision, [&](int t, const ElementGeometry& g, const std::array<double, 3>& bary,
                                              Point p, double w) {
        const Mat2& a = coeffs.A(space.mesh().element(t).region);
        const double c = coeffs.c(p);
        for (int i = 0; i < qx; ++i) u[i] = {exact.basis[i].value(p), exact.basis[i].gradient(p)};
        basis.values(bary, phi);
        basis.gradients(g, bary, grads);
        const auto dofs = space.element_dofs(t);
        for (int l = 0; l < qy; ++l) {
            DiscreteValue d{0.0, {}};
            for (int i = 0; i < nb; ++i) {
                d.value += full[l][dofs[i]] * phi[i];
                d.gradient = d.gradient + full[l][dofs[i]] * grads[i];
            }
            v[l] = d;
        }
        auto form = [&](const DiscreteValue& x, const DiscreteValue& y) {
            return w * (dot(a * x.gradient, y.gradient) + c * x.value * y.value);
        };
        for (int i = 0; i < qx; ++i) {
            for (int j = 0; j < qx; ++j) {
                out.g(i, j) += form(u[i], u[j]);
                out.bx(i, j) += w * u[i].value * u[j].value;
            }
            for (int l = 0; l < qy; ++l) out.p(i, l) += form(u[i], v[l]);
        }
        for (int l = 0; l < qy; ++l)
            for (int m = 0; m < qy; ++m) {
                out.s(l, m) += form(v[l], v[m]);
                out.by(l, m) += w * v[l].value * v[m].value;
            }
    });
    return out;
}

double directed_distance(const Eigen::MatrixXd& g, const Eigen::MatrixXd& p, const Eigen::MatrixXd& s,
                         const Eigen::MatrixXd& bx)
{
    return std::sqrt(schur_max(g, p, s, bx));
}

double directed_distance(const ExactEigenspace& exact, const EigenCluster& discrete, const FeSpace& space,
                         const Coefficients& coeffs, const GapOptions& options)
{
    const GapGrams grams = gap_grams(exact, discrete, space, coeffs, options);
    return directed_distance(grams.g, grams.p, grams.s, grams.bx);
}

GapResult gap_measures(const GapGrams& grams)
{
    GapResult r;
    r.forward = directed_distance(grams.g, grams.p, grams.s, grams.bx);
    r.reverse = directed_distance(grams.s, grams.p.transpose(), grams.g, grams.by);
    return r;
}

GapResult gap_measures(const ExactEigenspace& exact, const EigenCluster& discrete, const FeSpace& space,
                       const Coefficients& coeffs, const GapOptions& options)
{
    return gap_measures(gap_grams(exact, discrete, space, coeffs, options));
}

double gap_energy(const ExactEigenspace& exact, const EigenCluster& discrete, const FeSpace& space,
                  const Coefficients& coeffs, const GapOptions& options)
{
    return gap_measures(exact, discrete, space, coeffs, options).gap();
}

double brute_force_distance(const GapGrams& grams, int n_samples, std::uint64_t seed)
{
    if (n_samples < 1) throw Error("brute_force_distance: n_samples must be positive");
    const int q = static_cast<int>(grams.g.rows());
    Eigen::LLT<Eigen::MatrixXd> llt(symmetric(grams.s));
    if (llt.info() != Eigen::Success) throw Error("gap: singular Gram matrix of the projected space");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    double best = 0.0;
    Eigen::VectorXd alpha(q);
    for (int k = 0; k < n_samples; ++k) {
        for (int i = 0; i < q; ++i) alpha[i] = normal(rng);
        const double norm2 = alpha.dot(grams.bx * alpha);
        if (!(norm2 > 0.0)) continue;
        alpha /= std::sqrt(norm2);
        // Best approximation in span(v): a-orthogonal projection.
        const Eigen::VectorXd beta = llt.solve(grams.p.transpose() * alpha);
        const double d2 =
            alpha.dot(grams.g * alpha) - 2.0 * alpha.dot(grams.p * beta) + beta.dot(grams.s * beta);
        best = std::max(best, d2);
    }
    return std::sqrt(best);
}

double brute_force_distance(const ExactEigenspace& exact, const EigenCluster& discrete, const FeSpace& space,
                            const Coefficients& coeffs, int n_samples, std::uint64_t seed,
                            const GapOptions& options)
{
    return brute_force_distance(gap_grams(exact, discrete, space, coeffs, options), n_samples, seed);
}

double energy_error_squared(const FeSpace& space, const Coefficients& coeffs,
                            const std::vector<ExactFunction>& exact, const std::vector<std::vector<double>>& discrete,
                            const GapOptions& options)
{
    if (exact.size() != discrete.size()) throw Error("energy_error_squared: component count mismatch");
    std::vector<std::vector<double>> full;
    for (const auto& v : discrete) {
        if (static_cast<int>(v.size()) != space.num_free() && static_cast<int>(v.size()) != space.num_dofs())
            throw Error("energy_error_squared: vector does not live on the space");
        full.push_back(space.expand(v));
    }
    const LocalBasis basis = space.basis();
    const int nb = basis.size();
    std::array<double, 6> phi{};
    std::array<Vec2, 6> grads{};
    double total = 0.0;
    integrate(space, options.subdivision, [&](int t, const ElementGeometry& g, const std::array<double, 3>& bary,
                                              Point p, double w) {
        const Mat2& a = coeffs.A(space.mesh().element(t).region);
        const double c = coeffs.c(p);
        basis.values(bary, phi);
        basis.gradients(g, bary, grads);
        const auto dofs = space.element_dofs(t);
        for (std::size_t l = 0; l < full.size(); ++l) {
            double e = exact[l].value(p);
            Vec2 ge = exact[l].gradient(p);
            for (int i = 0; i < nb; ++i) {
                e -= full[l][dofs[i]] * phi[i];
                ge = ge - full[l][dofs[i]] * grads[i];
            }
            total += w * (dot(a * ge, ge) + c * e * e);
        }
    });
    return total;
}

} // namespace afem
