#include "afem/driver.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

int run(const afem::AfemConfig& config, const std::string& trace_path, const std::string& json_path,
        const std::string& plot_path)
{
    const afem::AfemTrace trace = afem::run_afem(config);
    for (const auto& w : trace.warnings) std::cerr << "warning: " << w << '\n';
    if (!trace_path.empty()) afem::export_trace(trace, trace_path, afem::TraceFormat::csv);
    if (!json_path.empty()) afem::export_trace(trace, json_path, afem::TraceFormat::json);
    if (!plot_path.empty()) {
        afem::PlotOptions plot;
        plot.title = trace.problem + ", P" + std::to_string(config.degree);
        plot.reference_slope = -static_cast<double>(config.degree);
        afem::emit_plot(trace, plot_path, plot);
    }

    std::printf("%-5s %10s %9s %8s  %-24s %12s %12s\n", "iter", "elements", "dofs", "marked", "lambdas", "eta2",
                "gap2");
    for (const auto& r : trace.rows) {
        std::string lambdas;
        for (double v : r.lambdas) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%s%.10g", lambdas.empty() ? "" : " ", v);
            lambdas += buf;
        }
        std::printf("%-5d %10d %9d %8d  %-24s %12.5e %12.5e\n", r.iter, r.n_elements, r.n_dofs, r.marked,
                    lambdas.c_str(), r.eta2, r.gap2);
    }
    std::printf("stopped: %s\n", trace.stop_reason.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Adaptive finite elements for clustered elliptic eigenvalues"};
    app.require_subcommand(1);

    afem::AfemConfig config;
    int first_n = 0;
    std::string trace_path, json_path, plot_path;
    CLI::App* cmd = app.add_subcommand("run", "Run the adaptive loop and write its trace");
    cmd->add_option("--problem", config.problem, "square | lshape | oscillator | file:<spec.json>")
        ->capture_default_str();
    cmd->add_option("--degree", config.degree, "Polynomial degree")->check(CLI::IsMember({1, 2}))->capture_default_str();
    cmd->add_option("--theta", config.theta, "Doerfler parameter in (0,1); 0.5 is the tested default")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    auto* cluster = cmd->add_option("--cluster", config.cluster_index, "1-based position of the tracked cluster")
                        ->check(CLI::PositiveNumber)
                        ->capture_default_str();
    auto* mult = cmd->add_option("--multiplicity", config.multiplicity, "Multiplicity of the tracked cluster")
                     ->check(CLI::PositiveNumber)
                     ->capture_default_str();
    auto* firstn = cmd->add_option("--first-n", first_n, "Track the first N eigenvalues instead")
                       ->check(CLI::PositiveNumber);
    firstn->excludes(cluster)->excludes(mult);
    cmd->add_option("--max-dof", config.max_dof, "Stop once the free dof count reaches this")->capture_default_str();
    cmd->add_option("--max-iterations", config.max_iterations)->capture_default_str();
    cmd->add_option("--b", config.bisections, "Bisections per marked element")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--eig-tol", config.eig_tol, "Eigensolver tolerance")->capture_default_str();
    cmd->add_option("--rel-gap-tol", config.rel_gap_tol, "Relative gap separating clusters")->capture_default_str();
    cmd->add_flag("--uniform", config.mark_all, "Mark every element (uniform refinement)");
    cmd->add_flag("--no-gap", [&](std::int64_t) { config.compute_gap = false; }, "Skip the gap column");
    cmd->add_flag("--no-timing", [&](std::int64_t) { config.record_timing = false; },
                  "Write 0 in the seconds column");
    cmd->add_option("--trace", trace_path, "Trace CSV output");
    cmd->add_option("--json", json_path, "Trace JSON output");
    cmd->add_option("--plot", plot_path, "Log-log SVG of eta2 and gap2 against dofs");
    cmd->add_option("--mesh-out", config.mesh_out_dir, "Directory for per-iteration meshes (JSON + VTK)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    if (first_n > 0) {
        config.mode = afem::AfemMode::first_n;
        config.first_n = first_n;
    }

    try {
        return run(config, trace_path, json_path, plot_path);
    } catch (const afem::ClusterIdentityError& e) {
        std::cerr << "cluster identity lost: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
