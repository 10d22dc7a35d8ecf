#include "afem/cholesky.hpp"
#include "afem/eigsolve.hpp"
#include "afem/fem.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

using namespace afem;

namespace {

SparseSym diagonal(std::vector<double> d)
{
    std::vector<SparseSym::Triplet> t;
    for (int i = 0; i < static_cast<int>(d.size()); ++i) t.push_back({i, i, d[i]});
    return SparseSym::from_triplets(static_cast<int>(d.size()), t);
}

// 5-point Laplacian on an m x m grid plus a shift.
SparseSym grid_laplacian(int m, double shift = 0.0)
{
    std::vector<SparseSym::Triplet> t;
    auto id = [m](int i, int j) { return j * m + i; };
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) {
            t.push_back({id(i, j), id(i, j), 4.0 + shift});
            if (i + 1 < m) t.push_back({id(i, j), id(i + 1, j), -1}), t.push_back({id(i + 1, j), id(i, j), -1});
            if (j + 1 < m) t.push_back({id(i, j), id(i, j + 1), -1}), t.push_back({id(i, j + 1), id(i, j), -1});
        }
    return SparseSym::from_triplets(m * m, t);
}

SparseSym random_spd(int n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<SparseSym::Triplet> t;
    std::vector<double> rowsum(n, 0.0);
    for (int k = 0; k < 3 * n; ++k) {
        const int i = static_cast<int>(rng() % n), j = static_cast<int>(rng() % n);
        if (i == j) continue;
        const double v = u(rng);
        t.push_back({i, j, v});
        t.push_back({j, i, v});
        rowsum[i] += std::abs(v);
        rowsum[j] += std::abs(v);
    }
    for (int i = 0; i < n; ++i) t.push_back({i, i, rowsum[i] + 0.5});
    return SparseSym::from_triplets(n, t);
}

Eigen::MatrixXd to_dense(const SparseSym& a)
{
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(a.dimension(), a.dimension());
    for (int i = 0; i < a.dimension(); ++i)
        for (int k = a.row_offsets()[i]; k < a.row_offsets()[i + 1]; ++k) d(i, a.columns()[k]) = a.values()[k];
    return d;
}

Mesh unit_square(int rounds)
{
    return refine_uniform(Mesh::build({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2}, {0, 2, 3}}), rounds);
}

} // namespace

TEST(SparseSym, TripletsAreSummedAndSorted)
{
    const SparseSym a = SparseSym::from_triplets(3, {{0, 0, 1}, {2, 1, 2}, {1, 2, 2}, {0, 0, 3}, {1, 1, 5}});
    EXPECT_EQ(a(0, 0), 4.0);
    EXPECT_EQ(a(2, 1), 2.0);
    EXPECT_EQ(a(0, 2), 0.0);
    EXPECT_EQ(a.nonzeros(), 4u);
    EXPECT_EQ(a.asymmetry(), 0.0);
    const std::vector<double> x{1, 2, 3};
    EXPECT_EQ(a.multiply(x), (std::vector<double>{4, 16, 4}));
    EXPECT_EQ(a.quadratic_form(x), 4 + 32 + 12.0);
    std::ostringstream os;
    a.write_matrix_market(os);
    EXPECT_EQ(os.str().rfind("%%MatrixMarket matrix coordinate real general", 0), 0u);
    EXPECT_THROW(SparseSym::from_triplets(2, {{0, 2, 1}}), Error);
}

TEST(MinimumDegree, IsAPermutationAndBeatsTheNaturalOrder)
{
    const SparseSym a = grid_laplacian(30, 0.1);
    const auto order = minimum_degree_ordering(a);
    std::set<int> seen(order.begin(), order.end());
    EXPECT_EQ(seen.size(), 900u);
    EXPECT_EQ(*seen.begin(), 0);
    EXPECT_EQ(*seen.rbegin(), 899);
    std::vector<int> natural(900);
    std::iota(natural.begin(), natural.end(), 0);
    const SparseCholesky amd(a, order), plain(a, natural);
    // Natural order fill is the bandwidth, about m^3 = 27000.
    EXPECT_LT(amd.factor_nonzeros(), plain.factor_nonzeros() / 2);
}

TEST(Cholesky, SolvesAgainstADenseReference)
{
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const SparseSym a = random_spd(120, seed);
        const SparseCholesky f(a);
        std::mt19937_64 rng(seed + 10);
        std::normal_distribution<double> normal;
        Eigen::VectorXd b(120);
        for (int i = 0; i < 120; ++i) b[i] = normal(rng);
        std::vector<double> bb(b.data(), b.data() + 120);
        const auto x = f.solve(bb);
        const Eigen::VectorXd ref = to_dense(a).ldlt().solve(b);
        for (int i = 0; i < 120; ++i) EXPECT_NEAR(x[i], ref[i], 1e-12 * (1 + std::abs(ref[i])));
    }
}

TEST(Cholesky, RejectsIndefiniteMatrices)
{
    const SparseSym a = SparseSym::from_triplets(2, {{0, 0, 1}, {0, 1, 2}, {1, 0, 2}, {1, 1, 1}});
    EXPECT_THROW(SparseCholesky{a}, Error);
    EXPECT_THROW(SparseCholesky(diagonal({1, 2}), std::vector<int>{0, 0}), Error);
}

TEST(SolveSmallest, DiagonalPencil)
{
    const auto pairs = solve_smallest(diagonal({1, 2, 3}), diagonal({1, 1, 1}), 2);
    ASSERT_EQ(pairs.size(), 2u);
    EXPECT_NEAR(pairs[0].value, 1.0, 1e-14);
    EXPECT_NEAR(pairs[1].value, 2.0, 1e-14);
    EXPECT_NEAR(std::abs(pairs[0].vector[0]), 1.0, 1e-12);
    EXPECT_NEAR(std::abs(pairs[1].vector[1]), 1.0, 1e-12);
}

TEST(SolveSmallest, IdentityPencilOnBothPaths)
{
    for (int m : {5, 20}) { // dense and Krylov paths
        const SparseSym a = grid_laplacian(m, 1.0);
        const auto pairs = solve_smallest(a, a, 3);
        for (const auto& p : pairs) EXPECT_NEAR(p.value, 1.0, 1e-10);
    }
}

TEST(SolveSmallest, MatchesDenseReferenceOnARandomPencil)
{
    const SparseSym k = random_spd(300, 7);
    const SparseSym m = random_spd(300, 8);
    const auto pairs = solve_smallest(k, m, 8);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(to_dense(k), to_dense(m));
    for (int i = 0; i < 8; ++i) EXPECT_NEAR(pairs[i].value, es.eigenvalues()[i], 1e-10 * es.eigenvalues()[i]);
    EXPECT_THROW(solve_smallest(k, m, 0), Error);
    EXPECT_THROW(solve_smallest(k, m, 301), Error);
}

TEST(SolveSmallest, P1LaplaceOnTheUnitSquare)
{
    // h = 1/64: 2 * 4^6 elements.
    const Mesh mesh = unit_square(6);
    const FeSpace s(mesh, 1);
    const SparseSym k = assemble_stiffness(s, Coefficients{});
    const SparseSym m = assemble_mass(s);
    const EigenOptions opt;
    const auto pairs = solve_smallest(k, m, 6, opt);
    const double exact = 2.0 * std::numbers::pi * std::numbers::pi;
    EXPECT_GT(pairs[0].value, exact);
    EXPECT_LT((pairs[0].value - exact) / exact, 2e-3);

    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& v = pairs[i].vector;
        if (i) EXPECT_GE(pairs[i].value, pairs[i - 1].value);
        // Rayleigh quotient consistency.
        EXPECT_LE(std::abs(k.quadratic_form(v) / m.quadratic_form(v) - pairs[i].value), 10 * opt.tol * pairs[i].value);
        for (std::size_t j = 0; j < pairs.size(); ++j)
            EXPECT_NEAR(m.bilinear_form(v, pairs[j].vector), i == j ? 1.0 : 0.0, 1e-10);
    }
    // The double eigenvalue 5 pi^2 is resolved as a pair.
    const auto spans = detect_cluster(std::vector<double>{pairs[0].value, pairs[1].value, pairs[2].value,
                                                          pairs[3].value},
                                      1e-3);
    ASSERT_EQ(spans.size(), 3u);
    EXPECT_EQ(spans[1].size, 2);
}

TEST(SolveSmallest, MonotoneFromAboveOnNestedMeshes)
{
    Mesh mesh = unit_square(2);
    std::vector<double> previous;
    for (int level = 0; level < 4; ++level) {
        const FeSpace s(mesh, 2);
        const auto pairs = solve_smallest(assemble_stiffness(s, Coefficients{}), assemble_mass(s), 4);
        const double pi2 = std::numbers::pi * std::numbers::pi;
        const double exact[4] = {2 * pi2, 5 * pi2, 5 * pi2, 8 * pi2};
        for (int i = 0; i < 4; ++i) {
            EXPECT_GE(pairs[i].value, exact[i] * (1 - 1e-12));
            if (!previous.empty()) EXPECT_LE(pairs[i].value, previous[i] + 1e-10);
        }
        previous.clear();
        for (const auto& p : pairs) previous.push_back(p.value);
        mesh = refine(mesh, std::vector<int>{0, mesh.num_elements() / 2, mesh.num_elements() - 1}).mesh;
    }
}

TEST(DetectCluster, Examples)
{
    const std::vector<double> a{19.7, 49.3, 49.4, 98.7};
    const auto s = detect_cluster(a, 0.01);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s[0].size, 1);
    EXPECT_EQ(s[1].first, 1);
    EXPECT_EQ(s[1].size, 2);
    EXPECT_EQ(s[2].size, 1);

    const std::vector<double> distinct{1, 2, 4, 8};
    EXPECT_EQ(detect_cluster(distinct, 1e-3).size(), 4u);

    const std::vector<double> oscillator{1.0004, 2.0011, 2.0012, 3.0021, 3.0023, 3.0024};
    const auto o = detect_cluster(oscillator, 1e-3);
    ASSERT_EQ(o.size(), 3u);
    EXPECT_EQ(o[0].size, 1);
    EXPECT_EQ(o[1].size, 2);
    EXPECT_EQ(o[2].size, 3);
    EXPECT_TRUE(detect_cluster(std::vector<double>{}, 1e-3).empty());
}

TEST(Recombine, RandomOrthogonalAndRayleighValues)
{
    const Eigen::MatrixXd q = random_orthogonal(3, 42);
    EXPECT_LT((q.transpose() * q - Eigen::MatrixXd::Identity(3, 3)).norm(), 1e-14);
    EXPECT_EQ(q, random_orthogonal(3, 42));

    const Mesh mesh = unit_square(3);
    const FeSpace s(mesh, 1);
    const SparseSym k = assemble_stiffness(s, Coefficients{});
    const SparseSym m = assemble_mass(s);
    const auto pairs = solve_smallest(k, m, 4);
    const EigenCluster c = make_cluster(pairs, {1, 2}, 2);
    EXPECT_EQ(c.q(), 2);
    EXPECT_THROW(make_cluster(pairs, {3, 2}, 3), Error);
    const EigenCluster r = recombine(c, random_orthogonal(2, 7));
    for (int l = 0; l < 2; ++l) {
        EXPECT_NEAR(r.values[l], k.quadratic_form(r.vectors[l]), 1e-10 * r.values[l]);
        for (int j = 0; j < 2; ++j) EXPECT_NEAR(m.bilinear_form(r.vectors[l], r.vectors[j]), l == j, 1e-12);
    }

    std::vector<std::vector<double>> v{pairs[0].vector, pairs[1].vector};
    for (double& x : v[1]) x = 2 * x;
    for (std::size_t i = 0; i < v[1].size(); ++i) v[1][i] += v[0][i];
    m_orthonormalize(v, m);
    EXPECT_NEAR(m.bilinear_form(v[0], v[1]), 0.0, 1e-14);
    EXPECT_NEAR(m.quadratic_form(v[1]), 1.0, 1e-14);
}
