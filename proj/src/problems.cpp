#include "afem/problems.hpp"

#include "afem/io.hpp"

#include <json.hpp>

#include <filesystem>
#include <numbers>

namespace afem {

using std::numbers::pi;

const ExactEigenspace* ProblemSpec::exact_cluster(int cluster_index) const
{
    for (const auto& c : exact_clusters)
        if (c.cluster_index == cluster_index) return &c.space;
    return nullptr;
}

std::optional<double> ProblemSpec::reference_value(int index) const
{
    for (const auto& r : reference_values)
        if (r.index == index) return r.value;
    return std::nullopt;
}

namespace {

// 2 sin(m pi x) sin(n pi y), normalized on the unit square.
ExactFunction sine_mode(int m, int n)
{
    return {[=](Point p) { return 2.0 * std::sin(m * pi * p.x) * std::sin(n * pi * p.y); },
            [=](Point p) {
                return Vec2{2.0 * m * pi * std::cos(m * pi * p.x) * std::sin(n * pi * p.y),
                            2.0 * n * pi * std::sin(m * pi * p.x) * std::cos(n * pi * p.y)};
            }};
}

ExactFunction hermite_mode(int nx, int ny)
{
    return {[=](Point p) { return hermite_function(nx, p.x) * hermite_function(ny, p.y); },
            [=](Point p) {
                return Vec2{hermite_function_derivative(nx, p.x) * hermite_function(ny, p.y),
                            hermite_function(nx, p.x) * hermite_function_derivative(ny, p.y)};
            }};
}

} // namespace

double hermite_function(int n, double x)
{
    if (n < 0) throw Error("hermite_function: negative order");
    double prev = 0.0;
    double cur = std::exp(-0.5 * x * x) / std::pow(pi, 0.25);
    for (int k = 0; k < n; ++k) {
        const double next = std::sqrt(2.0 / (k + 1)) * x * cur - std::sqrt(static_cast<double>(k) / (k + 1)) * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

double hermite_function_derivative(int n, double x)
{
    double d = -std::sqrt((n + 1) / 2.0) * hermite_function(n + 1, x);
    if (n > 0) d += std::sqrt(n / 2.0) * hermite_function(n - 1, x);
    return d;
}

ProblemSpec square_laplace()
{
    ProblemSpec p;
    p.name = "square";
    p.initial_mesh = Mesh::build({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2}, {0, 2, 3}});
    const double pi2 = pi * pi;
    p.exact_clusters.push_back({1, {2.0 * pi2, {sine_mode(1, 1)}, true}});
    p.exact_clusters.push_back({2, {5.0 * pi2, {sine_mode(1, 2), sine_mode(2, 1)}, true}});
    p.exact_clusters.push_back({3, {8.0 * pi2, {sine_mode(2, 2)}, true}});
    p.exact_clusters.push_back({4, {10.0 * pi2, {sine_mode(1, 3), sine_mode(3, 1)}, true}});
    return p;
}

ProblemSpec harmonic_oscillator(double box_half_width)
{
    if (!(box_half_width > 0.0)) throw Error("harmonic_oscillator: box half-width must be positive");
    const double w = box_half_width;
    ProblemSpec p;
    p.name = "oscillator";
    p.initial_mesh = Mesh::build({{-w, -w}, {w, -w}, {w, w}, {-w, w}, {0, 0}},
                                 {{0, 1, 4}, {1, 2, 4}, {2, 3, 4}, {3, 0, 4}});
    p.coefficients.diffusion = Mat2::scaled_identity(0.5);
    p.coefficients.reaction = [](Point x) { return 0.5 * (x.x * x.x + x.y * x.y); };
    // Whole-plane eigenfunctions; on the box they are exact up to truncation.
    p.exact_clusters.push_back({1, {1.0, {hermite_mode(0, 0)}, false}});
    p.exact_clusters.push_back({2, {2.0, {hermite_mode(1, 0), hermite_mode(0, 1)}, false}});
    p.exact_clusters.push_back({3, {3.0, {hermite_mode(2, 0), hermite_mode(1, 1), hermite_mode(0, 2)}, false}});
    return p;
}

ProblemSpec lshape_laplace()
{
    ProblemSpec p;
    p.name = "lshape";
    p.initial_mesh = Mesh::build({{-1, -1}, {0, -1}, {0, 0}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}},
                                 {{0, 1, 2}, {0, 2, 7}, {7, 2, 6}, {2, 5, 6}, {2, 3, 4}, {2, 4, 5}});
    p.reference_values.push_back({1, kLshapeLambda1, "P2 adaptive reference run, extrapolated"});
    return p;
}

namespace {

ScalarField reaction_from_json(const nlohmann::json& r)
{
    const std::string type = r.at("type").get<std::string>();
    if (type == "constant") {
        const double c = r.at("value").get<double>();
        if (!(c >= 0.0)) throw Error("problem json: constant reaction must be nonnegative");
        return [c](Point) { return c; };
    }
    if (type == "polynomial") {
        std::vector<std::array<double, 3>> terms;
        for (const auto& t : r.at("terms")) {
            if (t.size() != 3) throw Error("problem json: polynomial terms are [coef, px, py]");
            const int px = t[1].get<int>();
            const int py = t[2].get<int>();
            if (px < 0 || py < 0) throw Error("problem json: negative exponent");
            terms.push_back({t[0].get<double>(), static_cast<double>(px), static_cast<double>(py)});
        }
        return [terms](Point x) {
            double s = 0.0;
            for (const auto& t : terms) s += t[0] * std::pow(x.x, t[1]) * std::pow(x.y, t[2]);
            return s;
        };
    }
    if (type == "radial") {
        const auto coef = r.at("coefficients").get<std::vector<double>>();
        return [coef](Point x) {
            const double r2 = x.x * x.x + x.y * x.y;
            double s = 0.0;
            double power = 1.0;
            for (double c : coef) {
                s += c * power;
                power *= r2;
            }
            return s;
        };
    }
    throw Error("problem json: unknown reaction type '" + type + "'");
}

} // namespace

ProblemSpec load_problem(const std::string& path)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error("problem json: " + std::string(e.what()));
    }
    try {
        ProblemSpec p;
        p.name = j.value("name", std::filesystem::path(path).stem().string());
        const auto& mesh = j.at("mesh");
        if (mesh.is_string()) {
            std::filesystem::path mesh_path = mesh.get<std::string>();
            if (mesh_path.is_relative()) mesh_path = std::filesystem::path(path).parent_path() / mesh_path;
            p.initial_mesh = read_mesh(mesh_path.string());
        } else {
            p.initial_mesh = mesh_from_json(mesh.dump());
        }
        p.pre_refinements = j.value("pre_refinements", 3);
        if (p.pre_refinements < 0) throw Error("problem json: pre_refinements must be nonnegative");
        if (j.contains("diffusion")) {
            const auto& a = j.at("diffusion");
            if (a.is_number()) {
                p.coefficients.diffusion = Mat2::scaled_identity(a.get<double>());
            } else {
                const auto v = a.get<std::vector<double>>();
                if (v.size() != 3) throw Error("problem json: diffusion is a scalar or [axx, axy, ayy]");
                p.coefficients.diffusion = {v[0], v[1], v[2]};
            }
        }
        if (j.contains("reaction")) p.coefficients.reaction = reaction_from_json(j.at("reaction"));
        if (j.contains("reference_values"))
            for (const auto& r : j.at("reference_values"))
                p.reference_values.push_back({r.at(0).get<int>(), r.at(1).get<double>(), "from " + path});
        p.coefficients.validate();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw Error("problem json: " + std::string(e.what()));
    }
}

ProblemSpec problem_by_name(const std::string& name)
{
    if (name == "square") return square_laplace();
    if (name == "oscillator") return harmonic_oscillator();
    if (name == "lshape") return lshape_laplace();
    if (name.rfind("file:", 0) == 0) return load_problem(name.substr(5));
    throw Error("unknown problem '" + name + "' (expected square, lshape, oscillator or file:<path>)");
}

} // namespace afem
