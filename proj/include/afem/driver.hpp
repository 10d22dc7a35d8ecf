#pragma once

#include "afem/gap.hpp"
#include "afem/mesh.hpp"
#include "afem/problems.hpp"

#include <string>
#include <vector>

namespace afem {

enum class AfemMode
{
    /// Track one cluster, fixed by its 1-based position among distinct
    /// eigenvalues on the starting mesh.
    cluster,
    /// Track the first N eigenvalues with summed indicators.
    first_n,
};

struct AfemConfig
{
    /// Built-in name or file:<path>; used by the overloads without a
    /// ProblemSpec.
    std::string problem = "square";
    int degree = 1;
    double theta = 0.5;
    int bisections = 1;
    AfemMode mode = AfemMode::cluster;
    int cluster_index = 1;
    int multiplicity = 1;
    int first_n = 1;
    long max_dof = 50000;
    int max_iterations = 200;
    double eig_tol = 1e-10;
    double rel_gap_tol = 1e-3;
    bool compute_gap = true;
    /// Stop once the total squared estimator falls below this.
    double eta2_tol = 0.0;
    /// Mark every element (uniform refinement control run).
    bool mark_all = false;
    /// When false the seconds column is written as 0 so traces of equal
    /// runs are byte-identical.
    bool record_timing = true;
    /// If set, the mesh and indicators of every iteration go here.
    std::string mesh_out_dir;

    void validate() const;
};

struct TraceRow
{
    int iter = 0;
    int n_elements = 0;
    int n_dofs = 0;
    int marked = 0;
    std::vector<double> lambdas;
    double eta2 = 0.0;
    double osc2 = 0.0;
    /// Squared gap, its eigenvalue-error proxy, or the squared energy error
    /// of a source problem; NaN when no reference exists.
    double gap2 = 0.0;
    double seconds = 0.0;
    /// Sizes of the detected clusters among the tracked eigenvalues.
    std::vector<int> cluster_sizes;
};

struct AfemTrace
{
    std::string problem;
    std::vector<TraceRow> rows;
    /// Set when the estimator vanished or fell below eta2_tol.
    bool converged = false;
    std::string stop_reason;
    std::vector<std::string> warnings;
    /// 0-based position of the first tracked eigenvalue.
    int first_index = 0;
    Mesh final_mesh;
};

/// The tracked cluster changed size or merged with a neighbor.
class ClusterIdentityError : public Error
{
public:
    using Error::Error;
};

/// Solve, estimate, mark, refine until max_dof or max_iterations.
AfemTrace run_afem(const ProblemSpec& problem, const AfemConfig& config);
AfemTrace run_afem(const AfemConfig& config);

/// run_afem in first-N mode.
AfemTrace run_afem_first_n(const ProblemSpec& problem, const AfemConfig& config);

struct SourceData
{
    std::vector<ScalarField> sources;
    /// Optional exact solutions for the energy error column.
    std::vector<ExactFunction> exact;
};

/// The loop for the vector source problem -div(A grad u_i) + c u_i = f_i.
AfemTrace run_afem_source(const ProblemSpec& problem, const AfemConfig& config, const SourceData& data);

/// Least-squares slope of log y against log x.
double fit_slope(std::span<const double> x, std::span<const double> y);

/// Trace columns by name: iter, n_elements, n_elements_added (#T - #T_0),
/// n_dofs, marked, lambda_<i> (1-based), eta2, osc2, gap2, seconds.
std::vector<double> trace_column(const AfemTrace& trace, const std::string& field);

/// fit_slope over the last `window` rows.
double fit_slope(const AfemTrace& trace, const std::string& y_field, const std::string& x_field, int window);

enum class TraceFormat
{
    csv,
    json,
};

/// CSV columns: iter, n_elements, n_dofs, marked, lambda_1..lambda_m,
/// eta2, osc2, gap2, seconds.
std::string trace_to_csv(const AfemTrace& trace);
std::string trace_to_json(const AfemTrace& trace);
AfemTrace trace_from_csv(const std::string& text);
void export_trace(const AfemTrace& trace, const std::string& path, TraceFormat format = TraceFormat::csv);

struct PlotOptions
{
    std::string x_field = "n_dofs";
    std::vector<std::string> series = {"eta2", "gap2"};
    /// Slope of the guide line; 0 draws none.
    double reference_slope = -1.0;
    std::string title;
};

/// Log-log SVG plot, one polyline per series.
std::string trace_plot_svg(const AfemTrace& trace, const PlotOptions& options = {});
void emit_plot(const AfemTrace& trace, const std::string& path, const PlotOptions& options = {});

} // namespace afem
