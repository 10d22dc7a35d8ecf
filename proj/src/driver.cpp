#include "afem/driver.hpp"

#include "afem/cholesky.hpp"
#include "afem/estimator.hpp"
#include "afem/io.hpp"
#include "afem/marking.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <numeric>
#include <sstream>

namespace afem {

void AfemConfig::validate() const
{
    if (degree != 1 && degree != 2) throw Error("config: degree must be 1 or 2");
    if (!(theta > 0.0 && theta < 1.0)) throw Error("config: theta must lie in (0, 1)");
    if (bisections < 1) throw Error("config: b must be >= 1");
    if (mode == AfemMode::cluster && (cluster_index < 1 || multiplicity < 1))
        throw Error("config: cluster index and multiplicity must be >= 1");
    if (mode == AfemMode::first_n && first_n < 1) throw Error("config: N must be >= 1");
    if (max_dof < 1 || max_iterations < 1) throw Error("config: max_dof and max_iterations must be positive");
    if (!(eig_tol > 0.0)) throw Error("config: eigensolver tolerance must be positive");
    if (!(rel_gap_tol > 0.0)) throw Error("config: cluster gap tolerance must be positive");
    if (!(eta2_tol >= 0.0)) throw Error("config: estimator tolerance must be nonnegative");
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct StepOutcome
{
    std::vector<double> lambdas;
    IndicatorField field;
    double gap2 = kNaN;
    std::vector<int> cluster_sizes;
};

using Step = std::function<StepOutcome(const FeSpace&, int iter)>;

std::string describe(std::span<const double> values)
{
    std::ostringstream os;
    os.precision(10);
    os << '[';
    for (std::size_t i = 0; i < values.size(); ++i) os << (i ? ", " : "") << values[i];
    os << ']';
    return os.str();
}

AfemTrace run_loop(const ProblemSpec& problem, const AfemConfig& config, const Step& step)
{
    using Clock = std::chrono::steady_clock;
    AfemTrace trace;
    trace.problem = problem.name;
    Mesh mesh = problem.starting_mesh();
    if (!config.mesh_out_dir.empty()) std::filesystem::create_directories(config.mesh_out_dir);

    for (int iter = 0;; ++iter) {
        const auto t0 = Clock::now();
        const FeSpace space(mesh, config.degree);
        if (space.num_free() == 0) throw Error("mesh has no interior degrees of freedom");
        StepOutcome out = step(space, iter);

        TraceRow row;
        row.iter = iter;
        row.n_elements = mesh.num_elements();
        row.n_dofs = space.num_free();
        row.lambdas = std::move(out.lambdas);
        row.eta2 = out.field.total_eta2;
        row.osc2 = out.field.total_osc2;
        row.gap2 = out.gap2;
        row.cluster_sizes = std::move(out.cluster_sizes);

        if (!config.mesh_out_dir.empty()) {
            char name[32];
            std::snprintf(name, sizeof name, "mesh_%03d", iter);
            const auto base = std::filesystem::path(config.mesh_out_dir) / name;
            write_mesh(mesh, base.string() + ".json");
            write_vtk(mesh, base.string() + ".vtk", {{"eta2", out.field.eta2}, {"osc2", out.field.osc2}});
        }

        auto finish = [&](const char* reason) {
            row.seconds = config.record_timing ? std::chrono::duration<double>(Clock::now() - t0).count() : 0.0;
            trace.rows.push_back(row);
            trace.stop_reason = reason;
        };
        if (!(row.eta2 > config.eta2_tol)) {
            trace.converged = true;
            finish("converged");
            break;
        }
        if (row.n_dofs >= config.max_dof) {
            finish("max_dof");
            break;
        }

        std::vector<int> marked;
        if (config.mark_all) {
            marked.resize(mesh.num_elements());
            std::iota(marked.begin(), marked.end(), 0);
        } else {
            marked = dorfler_mark(out.field.eta2, config.theta).marked;
        }
        RefineResult refined = refine(mesh, marked, config.bisections);
        row.marked = static_cast<int>(marked.size());
        mesh = std::move(refined.mesh);
        if (iter + 1 >= config.max_iterations) {
            finish("max_iterations");
            break;
        }
        finish("");
    }
    trace.final_mesh = std::move(mesh);
    return trace;
}

EigenOptions eigen_options(const AfemConfig& config, int largest_cluster)
{
    EigenOptions o;
    o.tol = config.eig_tol;
    o.block_size = std::max(4, largest_cluster + 1);
    return o;
}

const ClusterSpan* span_containing(const std::vector<ClusterSpan>& spans, int index)
{
    for (const auto& s : spans)
        if (index >= s.first && index < s.first + s.size) return &s;
    return nullptr;
}

// Sum of |lambda_h - lambda_ref| over positions with a reference value, or
// NaN when some position has none.
double reference_proxy(const ProblemSpec& problem, std::span<const double> values, int first)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto ref = problem.reference_value(first + static_cast<int>(i) + 1);
        if (!ref) return kNaN;
        sum += std::abs(values[i] - *ref);
    }
    return sum;
}

} // namespace

AfemTrace run_afem(const ProblemSpec& problem, const AfemConfig& config)
{
    config.validate();
    if (config.mode == AfemMode::first_n) return run_afem_first_n(problem, config);
    problem.coefficients.validate();

    const int q = config.multiplicity;
    const int index = config.cluster_index;
    int first = -1;
    const EigenOptions options = eigen_options(config, q);

    Step step = [&](const FeSpace& space, int iter) {
        const SparseSym k = assemble_stiffness(space, problem.coefficients);
        const SparseSym m = assemble_mass(space);
        const int n = k.dimension();
        std::vector<EigenPair> pairs;
        std::vector<ClusterSpan> spans;
        ClusterSpan span{};
        if (iter == 0) {
            // Enough eigenvalues to see the target cluster and one above it.
            int nev = std::min(n, index + q + 2);
            for (;;) {
                pairs = solve_smallest(k, m, nev, options);
                std::vector<double> values;
                for (const auto& p : pairs) values.push_back(p.value);
                spans = detect_cluster(values, config.rel_gap_tol);
                if (static_cast<int>(spans.size()) > index || nev == n) break;
                nev = std::min(n, nev + q + 2);
            }
            std::vector<double> values;
            for (const auto& p : pairs) values.push_back(p.value);
            if (static_cast<int>(spans.size()) < index)
                throw Error("only " + std::to_string(spans.size()) + " distinct eigenvalues on the starting mesh");
            span = spans[index - 1];
            if (span.size != q)
                throw ClusterIdentityError("cluster " + std::to_string(index) + " has " + std::to_string(span.size) +
                                           " members on the starting mesh, expected " + std::to_string(q) +
                                           "; eigenvalues " + describe(values));
            first = span.first;
        } else {
            const int nev = std::min(n, first + q + 2);
            pairs = solve_smallest(k, m, nev, options);
            std::vector<double> values;
            for (const auto& p : pairs) values.push_back(p.value);
            spans = detect_cluster(values, config.rel_gap_tol);
            const ClusterSpan* s = span_containing(spans, first);
            if (!s || s->first != first || s->size != q)
                throw ClusterIdentityError("iteration " + std::to_string(iter) + ": cluster " + std::to_string(index) +
                                           " no longer consists of eigenvalues " + std::to_string(first + 1) + ".." +
                                           std::to_string(first + q) + "; eigenvalues " + describe(values));
            span = *s;
        }

        EigenCluster cluster = make_cluster(pairs, span, index);
        m_orthonormalize(cluster.vectors, m);

        StepOutcome out;
        out.lambdas = cluster.values;
        out.field = eigen_indicators(space, problem.coefficients, cluster);
        out.cluster_sizes = {q};
        const ExactEigenspace* exact = problem.exact_cluster(index);
        if (config.compute_gap && exact && exact->q() == q) {
            const double d = gap_energy(*exact, cluster, space, problem.coefficients);
            out.gap2 = d * d;
        } else if (config.compute_gap) {
            out.gap2 = reference_proxy(problem, cluster.values, first);
        }
        return out;
    };
    AfemTrace trace = run_loop(problem, config, step);
    trace.first_index = first;
    return trace;
}

AfemTrace run_afem(const AfemConfig& config) { return run_afem(problem_by_name(config.problem), config); }

AfemTrace run_afem_first_n(const ProblemSpec& problem, const AfemConfig& config)
{
    config.validate();
    problem.coefficients.validate();
    int n_tracked = config.first_n;
    std::vector<std::string> warnings;

    int largest = 1;
    for (const auto& c : problem.exact_clusters) largest = std::max(largest, c.space.q());
    const EigenOptions options = eigen_options(config, largest);

    Step step = [&](const FeSpace& space, int iter) {
        const SparseSym k = assemble_stiffness(space, problem.coefficients);
        const SparseSym m = assemble_mass(space);
        const int n = k.dimension();
        if (n_tracked > n) throw Error("N exceeds the number of degrees of freedom");
        std::vector<EigenPair> pairs;
        std::vector<double> values;
        for (;;) {
            pairs = solve_smallest(k, m, std::min(n, n_tracked + 2), options);
            values.clear();
            for (const auto& p : pairs) values.push_back(p.value);
            if (iter > 0) break;
            // N must not split a cluster of the starting spectrum.
            const auto spans = detect_cluster(values, config.rel_gap_tol);
            const ClusterSpan* s = span_containing(spans, n_tracked - 1);
            if (!s || s->first + s->size <= n_tracked || s->first + s->size > n) break;
            warnings.push_back("N = " + std::to_string(n_tracked) + " splits a cluster; extended to " +
                               std::to_string(s->first + s->size));
            n_tracked = s->first + s->size;
        }

        EigenCluster all;
        for (int i = 0; i < n_tracked; ++i) {
            all.values.push_back(pairs[i].value);
            all.vectors.push_back(pairs[i].vector);
        }

        StepOutcome out;
        out.lambdas = all.values;
        for (const auto& s : detect_cluster(std::span<const double>(values).first(n_tracked), config.rel_gap_tol))
            out.cluster_sizes.push_back(s.size);
        out.field = eigen_indicators(space, problem.coefficients, all);

        if (!config.compute_gap) return out;
        // Partition by the exact multiplicities when they cover N.
        double sum = 0.0;
        int pos = 0;
        for (int c = 1; pos < n_tracked; ++c) {
            const ExactEigenspace* exact = problem.exact_cluster(c);
            if (!exact || pos + exact->q() > n_tracked) {
                sum = kNaN;
                break;
            }
            const EigenCluster part = make_cluster(pairs, {pos, exact->q()}, c);
            const double d = gap_energy(*exact, part, space, problem.coefficients);
            sum += d * d;
            pos += exact->q();
        }
        out.gap2 = std::isnan(sum) ? reference_proxy(problem, all.values, 0) : sum;
        return out;
    };
    AfemTrace trace = run_loop(problem, config, step);
    trace.warnings = std::move(warnings);
    return trace;
}

AfemTrace run_afem_source(const ProblemSpec& problem, const AfemConfig& config, const SourceData& data)
{
    config.validate();
    problem.coefficients.validate();
    if (data.sources.empty()) throw Error("source problem: no source functions");
    if (!data.exact.empty() && data.exact.size() != data.sources.size())
        throw Error("source problem: one exact solution per source required");

    Step step = [&](const FeSpace& space, int) {
        const SparseSym k = assemble_stiffness(space, problem.coefficients);
        const SparseCholesky factor(k);
        std::vector<std::vector<double>> solutions;
        for (const auto& f : data.sources) solutions.push_back(factor.solve(assemble_load(space, f)));
        StepOutcome out;
        out.field = source_indicators(space, problem.coefficients, solutions, data.sources);
        if (!data.exact.empty() && config.compute_gap)
            out.gap2 = energy_error_squared(space, problem.coefficients, data.exact, solutions);
        return out;
    };
    return run_loop(problem, config, step);
}

double fit_slope(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) throw Error("fit_slope: x and y differ in length");
    if (x.size() < 3) throw Error("fit_slope: at least 3 points required");
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0;
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i]))
            throw Error("fit_slope: values must be positive and finite");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
        sx += lx[i];
        sy += ly[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) throw Error("fit_slope: x values are all equal");
    return sxy / sxx;
}

std::vector<double> trace_column(const AfemTrace& trace, const std::string& field)
{
    std::vector<double> out;
    out.reserve(trace.rows.size());
    const int t0 = trace.rows.empty() ? 0 : trace.rows.front().n_elements;
    for (const auto& r : trace.rows) {
        if (field == "iter") out.push_back(r.iter);
        else if (field == "n_elements") out.push_back(r.n_elements);
        else if (field == "n_elements_added") out.push_back(r.n_elements - t0);
        else if (field == "n_dofs") out.push_back(r.n_dofs);
        else if (field == "marked") out.push_back(r.marked);
        else if (field == "eta2") out.push_back(r.eta2);
        else if (field == "osc2") out.push_back(r.osc2);
        else if (field == "gap2") out.push_back(r.gap2);
        else if (field == "seconds") out.push_back(r.seconds);
        else if (field.rfind("lambda_", 0) == 0) {
            const int i = std::stoi(field.substr(7));
            if (i < 1 || i > static_cast<int>(r.lambdas.size())) throw Error("trace has no column " + field);
            out.push_back(r.lambdas[i - 1]);
        } else {
            throw Error("trace has no column " + field);
        }
    }
    return out;
}

double fit_slope(const AfemTrace& trace, const std::string& y_field, const std::string& x_field, int window)
{
    const auto x = trace_column(trace, x_field);
    const auto y = trace_column(trace, y_field);
    const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(std::max(window, 0)), x.size());
    return fit_slope(std::span<const double>(x).last(w), std::span<const double>(y).last(w));
}

namespace {

std::string number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::string trace_to_csv(const AfemTrace& trace)
{
    std::size_t m = 0;
    for (const auto& r : trace.rows) m = std::max(m, r.lambdas.size());
    std::string out = "iter,n_elements,n_dofs,marked";
    for (std::size_t i = 1; i <= m; ++i) out += ",lambda_" + std::to_string(i);
    out += ",eta2,osc2,gap2,seconds\n";
    for (const auto& r : trace.rows) {
        out += std::to_string(r.iter) + ',' + std::to_string(r.n_elements) + ',' + std::to_string(r.n_dofs) + ',' +
               std::to_string(r.marked);
        for (std::size_t i = 0; i < m; ++i) out += ',' + (i < r.lambdas.size() ? number(r.lambdas[i]) : "nan");
        out += ',' + number(r.eta2) + ',' + number(r.osc2) + ',' + number(r.gap2) + ',' + number(r.seconds) + '\n';
    }
    return out;
}

AfemTrace trace_from_csv(const std::string& text)
{
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw Error("trace csv: empty input");
    std::vector<std::string> header;
    {
        std::istringstream hs(line);
        for (std::string cell; std::getline(hs, cell, ',');) header.push_back(cell);
    }
    const std::size_t fixed = 8;
    if (header.size() < fixed || header[0] != "iter" || header[header.size() - 1] != "seconds")
        throw Error("trace csv: unexpected header");
    const std::size_t m = header.size() - fixed;

    AfemTrace trace;
    int line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
        if (cells.size() != header.size()) throw Error("trace csv: wrong cell count on line " + std::to_string(line_no));
        auto real = [&](std::size_t i) { return std::strtod(cells[i].c_str(), nullptr); };
        TraceRow r;
        r.iter = std::stoi(cells[0]);
        r.n_elements = std::stoi(cells[1]);
        r.n_dofs = std::stoi(cells[2]);
        r.marked = std::stoi(cells[3]);
        for (std::size_t i = 0; i < m; ++i) r.lambdas.push_back(real(4 + i));
        r.eta2 = real(4 + m);
        r.osc2 = real(5 + m);
        r.gap2 = real(6 + m);
        r.seconds = real(7 + m);
        trace.rows.push_back(std::move(r));
    }
    return trace;
}

std::string trace_to_json(const AfemTrace& trace)
{
    using nlohmann::json;
    auto real = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json j;
    j["problem"] = trace.problem;
    j["converged"] = trace.converged;
    j["stop_reason"] = trace.stop_reason;
    j["warnings"] = trace.warnings;
    j["first_index"] = trace.first_index;
    json& rows = j["rows"] = json::array();
    for (const auto& r : trace.rows) {
        json lambdas = json::array();
        for (double v : r.lambdas) lambdas.push_back(real(v));
        rows.push_back({{"iter", r.iter},
                        {"n_elements", r.n_elements},
                        {"n_dofs", r.n_dofs},
                        {"marked", r.marked},
                        {"lambdas", lambdas},
                        {"eta2", real(r.eta2)},
                        {"osc2", real(r.osc2)},
                        {"gap2", real(r.gap2)},
                        {"seconds", real(r.seconds)},
                        {"cluster_sizes", r.cluster_sizes}});
    }
    return j.dump(1);
}

void export_trace(const AfemTrace& trace, const std::string& path, TraceFormat format)
{
    write_text_file(path, format == TraceFormat::csv ? trace_to_csv(trace) : trace_to_json(trace));
}

std::string trace_plot_svg(const AfemTrace& trace, const PlotOptions& options)
{
    const double width = 640, height = 480, left = 70, right = 150, top = 40, bottom = 50;
    const auto xs = trace_column(trace, options.x_field);

    struct Series
    {
        std::string name;
        std::vector<std::pair<double, double>> points;
    };
    std::vector<Series> series;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& name : options.series) {
        Series s{name, {}};
        const auto ys = trace_column(trace, name);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (!(xs[i] > 0.0) || !(ys[i] > 0.0) || !std::isfinite(ys[i])) continue;
            const double lx = std::log10(xs[i]), ly = std::log10(ys[i]);
            s.points.push_back({lx, ly});
            x0 = std::min(x0, lx);
            x1 = std::max(x1, lx);
            y0 = std::min(y0, ly);
            y1 = std::max(y1, ly);
        }
        series.push_back(std::move(s));
    }
    if (!(x1 >= x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    // Axis limits at whole decades around the data.
    x0 = std::floor(x0), x1 = std::max(std::ceil(x1), x0 + 1);
    y0 = std::floor(y0), y1 = std::max(std::ceil(y1), y0 + 1);
    const double pw = width - left - right, ph = height - top - bottom;
    auto px = [&](double lx) { return left + (lx - x0) / (x1 - x0) * pw; };
    auto py = [&](double ly) { return top + (y1 - ly) / (y1 - y0) * ph; };

    std::ostringstream os;
    os.precision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<rect class=\"frame\" x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double d = x0; d <= x1 + 0.5; d += 1)
        os << "<text x=\"" << px(d) << "\" y=\"" << height - bottom + 18 << "\" font-size=\"12\" text-anchor=\"middle\">1e"
           << d << "</text>\n";
    for (double d = y0; d <= y1 + 0.5; d += 1)
        os << "<text x=\"" << left - 6 << "\" y=\"" << py(d) + 4 << "\" font-size=\"12\" text-anchor=\"end\">1e" << d
           << "</text>\n";
    os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 10 << "\" font-size=\"13\" text-anchor=\"middle\">"
       << options.x_field << "</text>\n";
    if (!options.title.empty())
        os << "<text x=\"" << left + pw / 2 << "\" y=\"24\" font-size=\"14\" text-anchor=\"middle\">" << options.title
           << "</text>\n";

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* color = colors[i % 6];
        os << "<polyline class=\"series\" data-name=\"" << series[i].name << "\" fill=\"none\" stroke=\"" << color
           << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [lx, ly] : series[i].points) os << px(lx) << ',' << py(ly) << ' ';
        os << "\"/>\n";
        os << "<text x=\"" << width - right + 10 << "\" y=\"" << top + 16 + 18 * i << "\" font-size=\"12\" fill=\""
           << color << "\">" << series[i].name << "</text>\n";
    }
    if (options.reference_slope != 0.0 && !series.empty() && !series[0].points.empty()) {
        // Guide through the first point of the first series, clipped to the frame.
        const auto [ax, ay] = series[0].points.front();
        double bx = x1;
        double by = ay + options.reference_slope * (bx - ax);
        if (by < y0) {
            by = y0;
            bx = ax + (by - ay) / options.reference_slope;
        } else if (by > y1) {
            by = y1;
            bx = ax + (by - ay) / options.reference_slope;
        }
        os << "<line class=\"guide\" x1=\"" << px(ax) << "\" y1=\"" << py(ay) << "\" x2=\"" << px(bx) << "\" y2=\""
           << py(by) << "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
        os << "<text x=\"" << width - right + 10 << "\" y=\"" << top + 16 + 18 * series.size()
           << "\" font-size=\"12\" fill=\"gray\">slope " << options.reference_slope << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void emit_plot(const AfemTrace& trace, const std::string& path, const PlotOptions& options)
{
    write_text_file(path, trace_plot_svg(trace, options));
}

} // namespace afem
