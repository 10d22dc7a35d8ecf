#include "afem/io.hpp"
#include "afem/problems.hpp"
#include "afem/quadrature.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <numbers>

using namespace afem;
using std::numbers::pi;

namespace {

// G = a(u_i, u_j) and BX = b(u_i, u_j) of an exact basis on the problem
// domain, via gap_grams with a throwaway discrete partner.
GapGrams exact_grams(const ProblemSpec& problem, const ExactEigenspace& exact, int rounds)
{
    const Mesh mesh = refine_uniform(problem.initial_mesh, rounds);
    const FeSpace space(mesh, 2);
    EigenCluster partner;
    partner.values = {1.0};
    partner.vectors = {std::vector<double>(space.num_free(), 1.0)};
    return gap_grams(exact, partner, space, problem.coefficients, {3});
}

void check_eigenspaces(const ProblemSpec& problem, int rounds, double rayleigh_tol)
{
    for (const auto& cluster : problem.exact_clusters) {
        const ExactEigenspace& e = cluster.space;
        const GapGrams grams = exact_grams(problem, e, rounds);
        for (int i = 0; i < e.q(); ++i) {
            EXPECT_NEAR(grams.g(i, i) / grams.bx(i, i), e.value, rayleigh_tol * e.value)
                << problem.name << " cluster " << cluster.cluster_index;
            for (int j = 0; j < e.q(); ++j) {
                EXPECT_NEAR(grams.bx(i, j), i == j ? 1.0 : 0.0, 1e-8);
                EXPECT_NEAR(grams.g(i, j), i == j ? e.value : 0.0, rayleigh_tol * e.value);
            }
        }
    }
}

} // namespace

TEST(Problems, SquareEigenvalues)
{
    const ProblemSpec p = square_laplace();
    EXPECT_EQ(p.initial_mesh.total_area(), 1.0);
    ASSERT_NE(p.exact_cluster(2), nullptr);
    EXPECT_DOUBLE_EQ(p.exact_cluster(1)->value, 2 * pi * pi);
    EXPECT_DOUBLE_EQ(p.exact_cluster(2)->value, 5 * pi * pi);
    EXPECT_EQ(p.exact_cluster(2)->q(), 2);
    EXPECT_EQ(p.exact_cluster(3)->q(), 1);
    EXPECT_DOUBLE_EQ(p.exact_cluster(3)->value, 8 * pi * pi);
    EXPECT_EQ(p.exact_cluster(4)->q(), 2);
    EXPECT_EQ(p.exact_cluster(9), nullptr);
    check_eigenspaces(p, 3, 1e-6);
}

TEST(Problems, OscillatorEigenvalues)
{
    const ProblemSpec p = harmonic_oscillator();
    EXPECT_DOUBLE_EQ(p.initial_mesh.total_area(), 11.0 * 11.0);
    EXPECT_DOUBLE_EQ(p.exact_cluster(1)->value, 1.0);
    EXPECT_DOUBLE_EQ(p.exact_cluster(2)->value, 2.0);
    EXPECT_EQ(p.exact_cluster(2)->q(), 2);
    EXPECT_DOUBLE_EQ(p.exact_cluster(3)->value, 3.0);
    EXPECT_EQ(p.exact_cluster(3)->q(), 3);
    EXPECT_NEAR(p.coefficients.c({1, 2}), 2.5, 1e-15);
    check_eigenspaces(p, 5, 1e-5);
}

TEST(Problems, HermiteFunctionsAreOrthonormal)
{
    // Gauss-Legendre on [-12, 12] split into panels of width 1/4.
    const auto& rule = line_rule(9);
    for (int m = 0; m < 5; ++m)
        for (int n = 0; n < 5; ++n) {
            double s = 0;
            for (int panel = -48; panel < 48; ++panel)
                for (const auto& qp : rule) {
                    const double x = 0.25 * (panel + qp.s);
                    s += 0.25 * qp.weight * hermite_function(m, x) * hermite_function(n, x);
                }
            EXPECT_NEAR(s, m == n ? 1.0 : 0.0, 1e-10);
        }
    // Derivative against a central difference.
    for (int n = 0; n < 5; ++n)
        for (double x : {-1.3, 0.0, 0.7, 2.5}) {
            const double h = 1e-5;
            const double fd = (hermite_function(n, x + h) - hermite_function(n, x - h)) / (2 * h);
            EXPECT_NEAR(hermite_function_derivative(n, x), fd, 1e-8);
        }
    EXPECT_THROW(hermite_function(-1, 0.0), Error);
}

TEST(Problems, LShape)
{
    const ProblemSpec p = lshape_laplace();
    EXPECT_DOUBLE_EQ(p.initial_mesh.total_area(), 3.0);
    EXPECT_TRUE(p.exact_clusters.empty());
    ASSERT_TRUE(p.reference_value(1).has_value());
    EXPECT_DOUBLE_EQ(*p.reference_value(1), kLshapeLambda1);
    EXPECT_FALSE(p.reference_value(2).has_value());
    // The reentrant corner is a vertex and no element covers the cut-out.
    EXPECT_EQ(locate(p.initial_mesh, {0.5, -0.5}), -1);
    EXPECT_GE(locate(p.initial_mesh, {-0.5, 0.5}), 0);
}

TEST(Problems, ByName)
{
    EXPECT_EQ(problem_by_name("square").name, square_laplace().name);
    EXPECT_EQ(problem_by_name("lshape").name, lshape_laplace().name);
    EXPECT_EQ(problem_by_name("oscillator").name, harmonic_oscillator().name);
    EXPECT_THROW(problem_by_name("circle"), Error);
}

TEST(Problems, LoadFromJson)
{
    const auto dir = std::filesystem::temp_directory_path() / "afem_problem_test";
    std::filesystem::create_directories(dir);
    write_mesh(square_laplace().initial_mesh, (dir / "square_mesh.json").string());
    write_text_file((dir / "a.json").string(), R"({"name": "aniso", "mesh": "square_mesh.json",
        "diffusion": [2.0, 0.5, 1.0], "pre_refinements": 1,
        "reaction": {"type": "polynomial", "terms": [[1.0, 0, 0], [3.0, 2, 1]]},
        "reference_values": [[1, 42.0]]})");
    const ProblemSpec p = problem_by_name("file:" + (dir / "a.json").string());
    EXPECT_EQ(p.name, "aniso");
    EXPECT_EQ(p.pre_refinements, 1);
    EXPECT_EQ(p.coefficients.diffusion.xy, 0.5);
    EXPECT_NEAR(p.coefficients.c({2, 3}), 1 + 3 * 4 * 3, 1e-12);
    EXPECT_EQ(p.reference_value(1), 42.0);
    EXPECT_EQ(p.initial_mesh.num_elements(), 2);

    write_text_file((dir / "b.json").string(), R"({"mesh": )" + mesh_to_json(lshape_laplace().initial_mesh) +
                                                   R"(, "diffusion": 3, "reaction": {"type": "radial", "coefficients": [1, 0, 2]}})");
    const ProblemSpec q = load_problem((dir / "b.json").string());
    EXPECT_EQ(q.name, "b");
    EXPECT_DOUBLE_EQ(q.initial_mesh.total_area(), 3.0);
    EXPECT_EQ(q.coefficients.diffusion.xx, 3.0);
    EXPECT_NEAR(q.coefficients.c({1, 1}), 1 + 2 * 4, 1e-12);

    write_text_file((dir / "c.json").string(), R"({"mesh": "square_mesh.json", "diffusion": [1, 2, 1]})");
    EXPECT_THROW(load_problem((dir / "c.json").string()), Error); // indefinite A
    write_text_file((dir / "d.json").string(), R"({"diffusion": 1})");
    EXPECT_THROW(load_problem((dir / "d.json").string()), Error);
    write_text_file((dir / "e.json").string(), "{not json");
    EXPECT_THROW(load_problem((dir / "e.json").string()), Error);
    std::filesystem::remove_all(dir);
}
