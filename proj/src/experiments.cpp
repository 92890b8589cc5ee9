#include "specrec/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "specrec/csv.hpp"
#include "specrec/parallel.hpp"
#include "specrec/rng.hpp"
#include "specrec/svg.hpp"
#include "specrec/theory_matrix.hpp"

namespace specrec {

namespace {

constexpr double kPi = std::numbers::pi;

void validate_spec(const ExperimentSpec& spec) {
    if (spec.measurement_count < 1 || spec.repeats < 1)
        throw std::invalid_argument("experiment: measurement count and repeats must be >= 1");
    if (spec.basis_size < 2)
        throw std::invalid_argument("experiment: basis needs at least two nodes");
    if (!(spec.lambda_lo >= 0.0 && spec.lambda_lo < spec.lambda_hi && spec.lambda_hi <= 1.0))
        throw std::invalid_argument("experiment: frequency window must satisfy 0 <= lo < hi <= 1");
    if (!(spec.noise_fraction >= 0.0))
        throw std::invalid_argument("experiment: noise fraction must be nonnegative");
    if (spec.methods.empty())
        throw std::invalid_argument("experiment: need at least one method");
    for (const std::string& method : spec.methods)
        if (method != "tikhonov" && method != "tv" && method != "cgls")
            throw std::invalid_argument("experiment: unknown method '" + method + "'");
    if (!spec.method_alphas.empty() && spec.method_alphas.size() != spec.methods.size())
        throw std::invalid_argument("experiment: method_alphas must align with methods");
    if (spec.quad_panels < 1 || spec.partition_resolution < 1)
        throw std::invalid_argument("experiment: quadrature and partition resolution must be >= 1");
    if (spec.threads < 0)
        throw std::invalid_argument("experiment: thread count must be nonnegative");
}

SolveReport dispatch_solve(const std::string& method, const TheoryMatrix& a,
                           const Eigen::VectorXd& d, double alpha,
                           const RegularizationConfig& cfg, double sigma) {
    if (method == "tikhonov") return solve_tikhonov(a, d, alpha);
    if (method == "tv") return solve_tv(a, d, alpha, cfg);
    return solve_cgls(a, d, cfg,
                      sigma > 0.0 ? std::optional<double>(sigma) : std::nullopt);
}

MethodSummary summarize(const std::string& method, std::span<const double> errors) {
    MethodSummary summary;
    summary.method = method;
    summary.repeats = static_cast<int>(errors.size());
    double sum = 0.0;
    for (double e : errors) sum += e;
    summary.mean_error = sum / static_cast<double>(errors.size());
    if (errors.size() > 1) {
        double ss = 0.0;
        for (double e : errors) ss += (e - summary.mean_error) * (e - summary.mean_error);
        summary.variance = ss / static_cast<double>(errors.size() - 1);
    }
    return summary;
}

std::ofstream open_report_file(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec)
            throw IoError("cannot create directory " + path.parent_path().string() + ": " +
                          ec.message());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

const char* series_color(std::size_t i) {
    static const char* colors[] = {"black", "#d62728", "#1f77b4", "#2ca02c", "#9467bd"};
    return colors[i % 5];
}

}  // namespace

ExperimentSpec::ExperimentSpec(std::string name_, AttenuationExponent p_, SourceFunction rho0_)
    : name(std::move(name_)), p(std::move(p_)), rho0(std::move(rho0_)) {}

double relative_error(const Eigen::VectorXd& f, const std::function<double(double)>& rho0,
                      const HatBasis& basis) {
    if (!rho0) throw std::invalid_argument("relative_error: rho0 must be callable");
    if (f.size() != basis.size())
        throw std::invalid_argument("relative_error: solution length must match basis size");
    Eigen::VectorXd reference(basis.size());
    for (int k = 0; k < basis.size(); ++k) reference[k] = rho0(basis.node(k));
    double norm = reference.norm();
    if (norm == 0.0)
        throw std::invalid_argument("relative_error: rho0 vanishes at every node");
    return (f - reference).norm() / norm;
}

ExperimentReport run_example(const ExperimentSpec& spec) {
    validate_spec(spec);
    HatBasis basis(spec.p.interval(), spec.basis_size);
    std::vector<double> lambdas =
        uniform_lambdas(spec.measurement_count, spec.lambda_lo, spec.lambda_hi);
    TheoryMatrix a =
        build_theory_matrix(spec.p, basis, lambdas, spec.quad_panels, spec.threads);

    ExperimentReport report;
    report.name = spec.name;
    report.nodes = basis.nodes();
    report.rho0_at_nodes.resize(report.nodes.size());
    for (std::size_t k = 0; k < report.nodes.size(); ++k)
        report.rho0_at_nodes[k] = spec.rho0(report.nodes[k]);

    std::size_t n_methods = spec.methods.size();
    report.records.resize(static_cast<std::size_t>(spec.repeats) * n_methods);
    auto rho0_eval = [&spec](double x) { return spec.rho0(x); };
    double alpha_scale = 1.0;
    if (spec.alpha_reference_noise > 0.0 && spec.noise_fraction != spec.alpha_reference_noise) {
        double ratio = spec.noise_fraction / spec.alpha_reference_noise;
        alpha_scale = ratio * ratio;
    }
    parallel_for(spec.repeats, spec.threads, [&](int run) {
        std::uint64_t seed = derive_seed(spec.base_seed, static_cast<std::uint64_t>(run));
        MeasurementSet measured = simulate_measurements(
            spec.p, spec.rho0, lambdas, spec.noise_fraction, seed, spec.quad_panels);
        Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(
            measured.values().data(), static_cast<Eigen::Index>(measured.size()));
        for (std::size_t mi = 0; mi < n_methods; ++mi) {
            double alpha =
                spec.method_alphas.empty() ? spec.config.alpha : spec.method_alphas[mi];
            if (alpha_scale != 1.0) alpha = std::max(alpha * alpha_scale, 1e-12);
            SolveReport solved = dispatch_solve(spec.methods[mi], a, d, alpha, spec.config,
                                                measured.sigma());
            SolutionRecord record;
            record.method = spec.methods[mi];
            record.run = run;
            record.relative_error = relative_error(solved.solution, rho0_eval, basis);
            record.converged = solved.converged;
            record.coeffs = std::move(solved.solution);
            report.records[static_cast<std::size_t>(run) * n_methods + mi] =
                std::move(record);
        }
    });

    for (std::size_t mi = 0; mi < n_methods; ++mi) {
        std::vector<double> errors(static_cast<std::size_t>(spec.repeats));
        for (int run = 0; run < spec.repeats; ++run)
            errors[static_cast<std::size_t>(run)] =
                report.records[static_cast<std::size_t>(run) * n_methods + mi].relative_error;
        report.summaries.push_back(summarize(spec.methods[mi], errors));
    }
    report.mean_error = report.summaries.front().mean_error;
    report.variance = report.summaries.front().variance;
    return report;
}

ExperimentReport run_plateau_study(const ExperimentSpec& spec) {
    ExperimentReport report = run_example(spec);
    LevelsetPartition partition = partition_levelsets(spec.p, spec.partition_resolution);
    ProjectedDensity projected =
        project(spec.rho0, partition, spec.quad_panels, spec.threads);

    report.projection_at_nodes.resize(report.nodes.size());
    for (std::size_t k = 0; k < report.nodes.size(); ++k)
        report.projection_at_nodes[k] = projected(report.nodes[k]);

    HatBasis basis(spec.p.interval(), spec.basis_size);
    std::vector<std::vector<double>> method_cell_means;
    for (std::size_t mi = 0; mi < spec.methods.size(); ++mi) {
        const SolutionRecord& first = report.records[mi];  // run 0, method mi
        DensityField field(basis, first.coeffs);
        method_cell_means.push_back(
            project(field, partition, spec.quad_panels, spec.threads).cell_means());
    }
    for (std::size_t c = 0; c < partition.cells().size(); ++c) {
        if (!partition.cell_averaged(c)) continue;
        PlateauCellStat stat;
        stat.cell = c;
        stat.level = partition.cells()[c].level;
        stat.projected_mean = projected.cell_means()[c];
        for (std::size_t mi = 0; mi < spec.methods.size(); ++mi)
            stat.solution_means.emplace_back(spec.methods[mi], method_cell_means[mi][c]);
        report.plateau_stats.push_back(std::move(stat));
    }
    report.partition = std::move(partition);
    return report;
}

std::vector<LimitedDataRow> run_limited_data_study(
    std::span<const std::pair<double, double>> intervals, int repeats,
    std::uint64_t base_seed, const RegularizationConfig& config, int threads) {
    if (intervals.empty())
        throw std::invalid_argument("limited-data study: need at least one frequency window");
    if (repeats < 1)
        throw std::invalid_argument("limited-data study: repeats must be >= 1");

    std::vector<LimitedDataRow> rows;
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        auto [lo, hi] = intervals[i];
        ExperimentSpec spec = limited_data_spec(lo, hi);
        spec.config = config;
        spec.repeats = repeats;
        spec.threads = threads;
        spec.base_seed = derive_seed(base_seed, i);
        ExperimentReport report = run_example(spec);

        LimitedDataRow row;
        row.lambda_lo = lo;
        row.lambda_hi = hi;
        row.repeats = repeats;
        row.mean_error = report.mean_error;
        row.variance = report.variance;
        row.run_errors.reserve(report.records.size());
        for (const SolutionRecord& record : report.records)
            row.run_errors.push_back(record.relative_error);
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_report_directory(const std::filesystem::path& dir, const ExperimentReport& report) {
    {
        std::ofstream out = open_report_file(dir / "report.csv");
        out << "method,runs,mean_error,variance\n";
        for (const MethodSummary& summary : report.summaries)
            out << summary.method << "," << summary.repeats << ","
                << csv::format_double(summary.mean_error) << ","
                << csv::format_double(summary.variance) << "\n";
        out.flush();
        if (!out) throw IoError("write failed for " + (dir / "report.csv").string());
    }

    std::vector<std::string> methods;
    for (const MethodSummary& summary : report.summaries) methods.push_back(summary.method);
    int runs = methods.empty() ? 0
                               : static_cast<int>(report.records.size() / methods.size());
    for (int run = 0; run < runs; ++run) {
        std::vector<std::string> columns{"x", "rho0"};
        if (!report.projection_at_nodes.empty()) columns.push_back("projected_rho0");
        for (const std::string& method : methods) columns.push_back("f_" + method);
        std::vector<std::vector<double>> table(report.nodes.size());
        for (std::size_t k = 0; k < report.nodes.size(); ++k) {
            auto& row = table[k];
            row.push_back(report.nodes[k]);
            row.push_back(report.rho0_at_nodes[k]);
            if (!report.projection_at_nodes.empty())
                row.push_back(report.projection_at_nodes[k]);
            for (std::size_t mi = 0; mi < methods.size(); ++mi)
                row.push_back(report.records[static_cast<std::size_t>(run) * methods.size() +
                                             mi]
                                  .coeffs[static_cast<Eigen::Index>(k)]);
        }
        csv::write_table(dir / "runs" / ("run_" + std::to_string(run) + ".csv"), columns,
                         table);
    }

    if (report.partition) csv::write_partition(dir / "partition.csv", *report.partition);

    std::vector<svg::Series> series;
    series.push_back({"rho0", series_color(0), report.nodes, report.rho0_at_nodes});
    if (!report.projection_at_nodes.empty())
        series.push_back(
            {"projected rho0", series_color(1), report.nodes, report.projection_at_nodes});
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        const Eigen::VectorXd& coeffs = report.records[mi].coeffs;  // run 0
        std::vector<double> values(coeffs.data(), coeffs.data() + coeffs.size());
        series.push_back({methods[mi], series_color(2 + mi), report.nodes, values});
    }
    svg::write_plot(dir / ("fig_" + report.name + ".svg"), report.name, series);
}

void write_limited_data_directory(const std::filesystem::path& dir,
                                  std::span<const LimitedDataRow> rows) {
    std::vector<std::vector<double>> summary;
    for (const LimitedDataRow& row : rows)
        summary.push_back({row.lambda_lo, row.lambda_hi, static_cast<double>(row.repeats),
                           row.mean_error, row.variance});
    csv::write_table(dir / "report.csv",
                     {"lambda_lo", "lambda_hi", "repeats", "mean_error", "variance"}, summary);

    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::vector<std::vector<double>> table;
        for (std::size_t r = 0; r < rows[i].run_errors.size(); ++r)
            table.push_back({static_cast<double>(r), rows[i].run_errors[r]});
        csv::write_table(dir / "runs" / ("run_" + std::to_string(i) + ".csv"),
                         {"run", "relative_error"}, table);
    }

    svg::Series means{"mean relative error", "black", {}, {}};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        means.x.push_back(static_cast<double>(i));
        means.y.push_back(rows[i].mean_error);
    }
    svg::write_plot(dir / "fig_limited_data.svg", "limited-data", {means});
}

AttenuationExponent plateau_attenuation() {
    Interval domain(0.0, 1.0);
    std::vector<AttenuationExponent::Segment> segments;
    segments.push_back({0.0, 0.2, [](double x) { return 5.0 / 3.0 * x; }, std::nullopt});
    segments.push_back({0.2, 0.4, nullptr, 1.0 / 3.0});
    segments.push_back(
        {0.4, 0.6, [](double x) { return 5.0 / 3.0 * x - 1.0 / 3.0; }, std::nullopt});
    segments.push_back({0.6, 0.8, nullptr, 2.0 / 3.0});
    segments.push_back(
        {0.8, 1.0, [](double x) { return 5.0 / 3.0 * x - 2.0 / 3.0; }, std::nullopt});
    return AttenuationExponent::segments(domain, std::move(segments));
}

ExperimentSpec example1_spec() {
    Interval domain(0.0, 1.0);
    ExperimentSpec spec("example1",
                        AttenuationExponent::closed_form(domain, [](double x) { return x; }),
                        SourceFunction(domain, [](double x) { return std::sin(kPi * x); }));
    spec.methods = {"tikhonov"};
    spec.repeats = 4;
    // Frozen by a one-off calibration at 0.5% noise: the largest weight that
    // keeps the residual under the discrepancy bound sits near 3e-5 but
    // noticeably over-smooths; 3e-6 minimizes the seed-averaged error.
    spec.config.alpha = 3e-6;
    spec.alpha_reference_noise = 0.005;
    return spec;
}

ExperimentSpec example2_spec() {
    Interval domain(0.0, 1.0);
    ExperimentSpec spec("example2",
                        AttenuationExponent::closed_form(domain, [](double x) { return x; }),
                        SourceFunction::indicator(domain, 0.3, 0.6, 0.3));
    spec.methods = {"tv", "tikhonov"};
    // The discontinuous source leaves the least-squares residual floor above
    // the discrepancy bound (the kernel passes only a handful of modes), so
    // the bound selects nothing sensible; both weights are frozen at the
    // error-optimal decade of the one-off calibration instead.
    spec.method_alphas = {3e-4, 1e-6};
    spec.alpha_reference_noise = 0.005;
    return spec;
}

ExperimentSpec plateau_spec() {
    Interval domain(0.0, 1.0);
    ExperimentSpec spec("plateau", plateau_attenuation(),
                        SourceFunction(domain, [](double x) { return std::sin(kPi * x); }));
    // Tikhonov needs a lighter touch here than in example 1: the second
    // plateau sees the least data weight and already carries a 0.04 smoothing
    // bias at alpha=1e-6, twice that at the example-1 weight.
    spec.methods = {"tikhonov", "tv", "cgls"};
    spec.method_alphas = {3e-7, 1e-4, 0.0};  // cgls ignores alpha
    spec.config.alpha = 3e-7;
    // CGLS semi-converges on this exponent: the plateau averages are best
    // right around five iterations and degrade fast afterwards, and the
    // discrepancy stop triggers one iteration too early. Fix the count and
    // disable the residual stop (tau = 0 never triggers).
    spec.config.cgls_max_iters = 5;
    spec.config.discrepancy_tau = 0.0;
    // Keep the weights absolute here (no noise rescaling): the kernel is
    // constant in x across each flat stretch of the exponent, so the matrix
    // columns under a plateau are linearly dependent and the penalty has to
    // pick the within-plateau profile even from exact data.
    spec.alpha_reference_noise = 0.0;
    return spec;
}

ExperimentSpec limited_data_spec(double lambda_lo, double lambda_hi) {
    Interval domain(0.0, 1.0);
    ExperimentSpec spec(
        "limited-data",
        AttenuationExponent::closed_form(domain, [](double x) { return std::expm1(x); }),
        SourceFunction(domain,
                       [](double x) { return -0.5 * std::sin(2.0 * kPi * x) + 0.5; }));
    spec.lambda_lo = lambda_lo;
    spec.lambda_hi = lambda_hi;
    spec.methods = {"tikhonov"};
    spec.config.alpha = 1e-6;  // frozen: best seed-averaged errors across all four windows
    spec.alpha_reference_noise = 0.005;
    return spec;
}

std::vector<std::pair<double, double>> limited_data_intervals() {
    return {{0.0, 1.0}, {0.2, 0.8}, {0.3, 0.6}, {0.4, 0.5}};
}

}  // namespace specrec
