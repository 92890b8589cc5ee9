// Command-line front end: simulate measurements, invert them, project a
// source through the levelset structure of p, or run a named study.
// Exit codes: 0 success, 2 usage/config problem, 3 I/O failure, 4 solver
// finished with its non-convergence flag set.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "specrec/csv.hpp"
#include "specrec/experiments.hpp"
#include "specrec/model.hpp"
#include "specrec/projection.hpp"
#include "specrec/solvers.hpp"
#include "specrec/theory_matrix.hpp"

using nlohmann::json;
using namespace specrec;

namespace {

constexpr std::uint64_t kDefaultSeed = 20260814;

struct ProblemConfig {
    Interval domain;
    AttenuationExponent p;
    SourceFunction rho0;
    int measurement_count;
    double lambda_lo, lambda_hi;
    double noise_fraction;
    int basis_size;
    std::string method;
    RegularizationConfig reg;
    int panels;
    int grid_resolution;
    double eps_p;  // 0 = variant default
    std::uint64_t seed;
};

[[noreturn]] void config_fail(const std::string& anchor, const std::string& message) {
    throw SchemaError(anchor + ": " + message);
}

void reject_unknown_keys(const json& object, const std::string& anchor,
                         std::initializer_list<const char*> allowed) {
    for (auto it = object.begin(); it != object.end(); ++it) {
        bool known = false;
        for (const char* key : allowed)
            if (it.key() == key) {
                known = true;
                break;
            }
        if (!known) config_fail(anchor, "unknown key '" + it.key() + "'");
    }
}

double number_or(const json& object, const std::string& anchor, const char* key,
                 double fallback) {
    if (!object.contains(key)) return fallback;
    const json& value = object.at(key);
    if (!value.is_number()) config_fail(anchor + "." + key, "expected a number");
    return value.get<double>();
}

double require_number(const json& object, const std::string& anchor, const char* key) {
    if (!object.contains(key)) config_fail(anchor, std::string("missing key '") + key + "'");
    const json& value = object.at(key);
    if (!value.is_number()) config_fail(anchor + "." + key, "expected a number");
    return value.get<double>();
}

int int_or(const json& object, const std::string& anchor, const char* key, int fallback) {
    if (!object.contains(key)) return fallback;
    const json& value = object.at(key);
    if (!value.is_number_integer()) config_fail(anchor + "." + key, "expected an integer");
    return value.get<int>();
}

std::string string_or(const json& object, const std::string& anchor, const char* key,
                      const std::string& fallback) {
    if (!object.contains(key)) return fallback;
    const json& value = object.at(key);
    if (!value.is_string()) config_fail(anchor + "." + key, "expected a string");
    return value.get<std::string>();
}

AttenuationExponent build_p(const json& section, const std::string& anchor, Interval domain) {
    std::string kind = string_or(section, anchor, "kind", "identity");
    if (kind == "identity") {
        reject_unknown_keys(section, anchor, {"kind"});
        return AttenuationExponent::closed_form(domain, [](double x) { return x; });
    }
    if (kind == "expm1") {
        reject_unknown_keys(section, anchor, {"kind"});
        return AttenuationExponent::closed_form(domain,
                                                [](double x) { return std::expm1(x); });
    }
    if (kind == "square") {
        reject_unknown_keys(section, anchor, {"kind"});
        return AttenuationExponent::closed_form(domain, [](double x) { return x * x; });
    }
    if (kind == "constant") {
        reject_unknown_keys(section, anchor, {"kind", "value"});
        return AttenuationExponent::constant(domain, require_number(section, anchor, "value"));
    }
    if (kind == "affine_segments") {
        reject_unknown_keys(section, anchor, {"kind", "segments"});
        if (!section.contains("segments") || !section.at("segments").is_array())
            config_fail(anchor, "affine_segments needs a 'segments' array");
        std::vector<AttenuationExponent::Segment> segments;
        std::size_t index = 0;
        for (const json& seg : section.at("segments")) {
            std::string seg_anchor = anchor + ".segments[" + std::to_string(index++) + "]";
            if (!seg.is_object()) config_fail(seg_anchor, "expected an object");
            reject_unknown_keys(seg, seg_anchor, {"lo", "hi", "slope", "intercept", "plateau"});
            double lo = require_number(seg, seg_anchor, "lo");
            double hi = require_number(seg, seg_anchor, "hi");
            if (seg.contains("plateau")) {
                if (seg.contains("slope") || seg.contains("intercept"))
                    config_fail(seg_anchor, "plateau excludes slope/intercept");
                segments.push_back({lo, hi, nullptr, require_number(seg, seg_anchor, "plateau")});
            } else {
                double slope = number_or(seg, seg_anchor, "slope", 0.0);
                double intercept = number_or(seg, seg_anchor, "intercept", 0.0);
                segments.push_back(
                    {lo, hi, [slope, intercept](double x) { return slope * x + intercept; },
                     std::nullopt});
            }
        }
        return AttenuationExponent::segments(domain, std::move(segments));
    }
    if (kind == "samples") {
        reject_unknown_keys(section, anchor, {"kind", "values"});
        if (!section.contains("values") || !section.at("values").is_array())
            config_fail(anchor, "samples needs a 'values' array");
        std::vector<double> values;
        for (const json& value : section.at("values")) {
            if (!value.is_number()) config_fail(anchor + ".values", "expected numbers");
            values.push_back(value.get<double>());
        }
        return AttenuationExponent::samples(domain, std::move(values));
    }
    config_fail(anchor + ".kind", "unknown p kind '" + kind +
                                      "' (identity, expm1, square, constant, affine_segments, "
                                      "samples)");
}

SourceFunction build_rho0(const json& section, const std::string& anchor, Interval domain) {
    std::string kind = string_or(section, anchor, "kind", "sine");
    if (kind == "sine") {
        reject_unknown_keys(section, anchor, {"kind", "amplitude", "pi_multiple", "offset"});
        double amplitude = number_or(section, anchor, "amplitude", 1.0);
        double pi_multiple = number_or(section, anchor, "pi_multiple", 1.0);
        double offset = number_or(section, anchor, "offset", 0.0);
        double angular = pi_multiple * std::numbers::pi;
        return SourceFunction(domain, [amplitude, angular, offset](double x) {
            return amplitude * std::sin(angular * x) + offset;
        });
    }
    if (kind == "indicator") {
        reject_unknown_keys(section, anchor, {"kind", "lo", "hi", "height"});
        return SourceFunction::indicator(domain, require_number(section, anchor, "lo"),
                                         require_number(section, anchor, "hi"),
                                         require_number(section, anchor, "height"));
    }
    if (kind == "constant") {
        reject_unknown_keys(section, anchor, {"kind", "value"});
        return SourceFunction::constant(domain, require_number(section, anchor, "value"));
    }
    if (kind == "affine") {
        reject_unknown_keys(section, anchor, {"kind", "slope", "intercept"});
        double slope = number_or(section, anchor, "slope", 1.0);
        double intercept = number_or(section, anchor, "intercept", 0.0);
        return SourceFunction(domain,
                              [slope, intercept](double x) { return slope * x + intercept; });
    }
    config_fail(anchor + ".kind",
                "unknown rho0 kind '" + kind + "' (sine, indicator, constant, affine)");
}

ProblemConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& err) {
        std::size_t line = 1;
        for (std::size_t i = 0; i < err.byte && i < text.size(); ++i)
            if (text[i] == '\n') ++line;
        config_fail(path.string() + ":" + std::to_string(line), err.what());
    }
    if (!root.is_object()) config_fail(path.string(), "top level must be an object");
    std::string anchor = path.string();
    reject_unknown_keys(root, anchor,
                        {"schema_version", "interval", "p", "rho0", "measurements", "basis",
                         "solver", "quadrature", "projection", "seed"});
    int version = int_or(root, anchor, "schema_version", -1);
    if (version != 1) config_fail(anchor + ".schema_version", "expected 1");

    json empty = json::object();
    const json& interval = root.contains("interval") ? root.at("interval") : empty;
    reject_unknown_keys(interval, anchor + ".interval", {"a", "b"});
    Interval domain(number_or(interval, anchor + ".interval", "a", 0.0),
                    number_or(interval, anchor + ".interval", "b", 1.0));

    const json& measurements = root.contains("measurements") ? root.at("measurements") : empty;
    reject_unknown_keys(measurements, anchor + ".measurements",
                        {"count", "lambda_lo", "lambda_hi", "noise_fraction"});
    const json& basis = root.contains("basis") ? root.at("basis") : empty;
    reject_unknown_keys(basis, anchor + ".basis", {"size"});
    const json& solver = root.contains("solver") ? root.at("solver") : empty;
    reject_unknown_keys(solver, anchor + ".solver",
                        {"method", "alpha", "tv_smoothing", "tv_max_iters", "tv_tol",
                         "cgls_max_iters", "discrepancy_tau"});
    const json& quadrature = root.contains("quadrature") ? root.at("quadrature") : empty;
    reject_unknown_keys(quadrature, anchor + ".quadrature", {"panels"});
    const json& projection = root.contains("projection") ? root.at("projection") : empty;
    reject_unknown_keys(projection, anchor + ".projection", {"grid_resolution", "eps_p"});

    RegularizationConfig reg;
    reg.alpha = number_or(solver, anchor + ".solver", "alpha", reg.alpha);
    reg.tv_smoothing = number_or(solver, anchor + ".solver", "tv_smoothing", reg.tv_smoothing);
    reg.tv_max_iters = int_or(solver, anchor + ".solver", "tv_max_iters", reg.tv_max_iters);
    reg.tv_tol = number_or(solver, anchor + ".solver", "tv_tol", reg.tv_tol);
    reg.cgls_max_iters =
        int_or(solver, anchor + ".solver", "cgls_max_iters", reg.cgls_max_iters);
    reg.discrepancy_tau =
        number_or(solver, anchor + ".solver", "discrepancy_tau", reg.discrepancy_tau);

    std::uint64_t seed = kDefaultSeed;
    if (root.contains("seed")) {
        const json& value = root.at("seed");
        if (!value.is_number_unsigned() && !value.is_number_integer())
            config_fail(anchor + ".seed", "expected a nonnegative integer");
        if (value.is_number_integer() && value.get<std::int64_t>() < 0)
            config_fail(anchor + ".seed", "expected a nonnegative integer");
        seed = value.get<std::uint64_t>();
    }

    return ProblemConfig{
        domain,
        build_p(root.contains("p") ? root.at("p") : empty, anchor + ".p", domain),
        build_rho0(root.contains("rho0") ? root.at("rho0") : empty, anchor + ".rho0", domain),
        int_or(measurements, anchor + ".measurements", "count", 300),
        number_or(measurements, anchor + ".measurements", "lambda_lo", 0.0),
        number_or(measurements, anchor + ".measurements", "lambda_hi", 1.0),
        number_or(measurements, anchor + ".measurements", "noise_fraction", 0.005),
        int_or(basis, anchor + ".basis", "size", 400),
        string_or(solver, anchor + ".solver", "method", "tikhonov"),
        reg,
        int_or(quadrature, anchor + ".quadrature", "panels", 64),
        int_or(projection, anchor + ".projection", "grid_resolution", 1000),
        number_or(projection, anchor + ".projection", "eps_p", 0.0),
        seed,
    };
}

void check_method_name(const std::string& method) {
    if (method != "tikhonov" && method != "tv" && method != "cgls")
        throw std::invalid_argument("unknown method '" + method +
                                    "' (expected tikhonov, tv, or cgls)");
}

int cmd_simulate(const ProblemConfig& config, const std::filesystem::path& out_dir,
                 int panels) {
    std::vector<double> lambdas =
        uniform_lambdas(config.measurement_count, config.lambda_lo, config.lambda_hi);
    MeasurementSet measured = simulate_measurements(config.p, config.rho0, lambdas,
                                                    config.noise_fraction, config.seed, panels);
    csv::write_measurements(out_dir / "measurements.csv", measured);
    return 0;
}

int cmd_invert(const ProblemConfig& config, const std::filesystem::path& measurements_path,
               const std::filesystem::path& out_dir, int threads) {
    MeasurementSet measured = csv::read_measurements(measurements_path);
    HatBasis basis(config.domain, config.basis_size);
    TheoryMatrix a =
        build_theory_matrix(config.p, basis, measured.lambdas(), config.panels, threads);
    Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(
        measured.values().data(), static_cast<Eigen::Index>(measured.size()));

    check_method_name(config.method);
    SolveReport report;
    if (config.method == "tikhonov")
        report = solve_tikhonov(a, d, config.reg.alpha);
    else if (config.method == "tv")
        report = solve_tv(a, d, config.reg.alpha, config.reg);
    else
        report = solve_cgls(a, d, config.reg,
                            measured.sigma() > 0.0 ? std::optional<double>(measured.sigma())
                                                   : std::nullopt);

    std::vector<std::vector<double>> rows;
    for (int k = 0; k < basis.size(); ++k)
        rows.push_back({basis.node(k), report.solution[k]});
    csv::write_table(out_dir / "solution.csv", {"x", "f"}, rows);

    std::filesystem::path report_path = out_dir / "solve_report.txt";
    std::ofstream out(report_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + report_path.string() + " for writing");
    out << "method=" << report.method << "\n"
        << "alpha=" << csv::format_double(config.reg.alpha) << "\n"
        << "iterations=" << report.iterations << "\n"
        << "residual_norm=" << csv::format_double(report.residual_norm) << "\n"
        << "converged=" << (report.converged ? 1 : 0) << "\n"
        << "normal_eq_residual=" << csv::format_double(report.normal_eq_residual) << "\n"
        << "solution=solution.csv\n";
    out.flush();
    if (!out) throw IoError("write failed for " + report_path.string());
    return report.converged ? 0 : 4;
}

int cmd_project(const ProblemConfig& config, const std::filesystem::path& out_dir,
                int threads) {
    LevelsetPartition partition =
        config.eps_p > 0.0
            ? partition_levelsets(config.p, config.grid_resolution, config.eps_p)
            : partition_levelsets(config.p, config.grid_resolution);
    ProjectedDensity projected = project(config.rho0, partition, config.panels, threads);

    std::vector<std::vector<double>> rows;
    int count = config.grid_resolution;
    for (int i = 0; i <= count; ++i) {
        double x = config.domain.a() +
                   config.domain.length() * (static_cast<double>(i) / static_cast<double>(count));
        if (i == count) x = config.domain.b();
        rows.push_back({x, config.rho0(x), projected(x)});
    }
    csv::write_table(out_dir / "projection.csv", {"x", "rho", "projected"}, rows);
    csv::write_partition(out_dir / "partition.csv", partition);
    return 0;
}

struct ExperimentOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<double> noise;
    std::optional<double> alpha;
    std::optional<std::string> method;
    int threads = 0;
};

int cmd_experiment(const std::string& name, const std::filesystem::path& out_dir,
                   const ExperimentOverrides& overrides) {
    if (name != "example1" && name != "example2" && name != "plateau" &&
        name != "limited-data")
        throw std::invalid_argument("unknown experiment '" + name +
                                    "' (valid: example1, example2, plateau, limited-data)");

    if (name == "limited-data") {
        ExperimentSpec base = limited_data_spec(0.0, 1.0);
        RegularizationConfig config = base.config;
        if (overrides.alpha) config.alpha = *overrides.alpha;
        auto intervals = limited_data_intervals();
        std::vector<LimitedDataRow> rows = run_limited_data_study(
            intervals, 100, overrides.seed.value_or(base.base_seed), config,
            overrides.threads);
        write_limited_data_directory(out_dir, rows);
        return 0;
    }

    ExperimentSpec spec = name == "example1" ? example1_spec()
                          : name == "example2" ? example2_spec()
                                               : plateau_spec();
    if (overrides.seed) spec.base_seed = *overrides.seed;
    if (overrides.noise) spec.noise_fraction = *overrides.noise;
    if (overrides.alpha) {
        spec.config.alpha = *overrides.alpha;
        for (double& alpha : spec.method_alphas) alpha = *overrides.alpha;
    }
    if (overrides.method) {
        check_method_name(*overrides.method);
        spec.methods = {*overrides.method};
        spec.method_alphas.clear();
    }
    spec.threads = overrides.threads;
    ExperimentReport report =
        name == "plateau" ? run_plateau_study(spec) : run_example(spec);
    write_report_directory(out_dir, report);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"1-D multispectral source recovery: simulate, invert, project, reproduce"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", measurements_path, method_override,
                experiment_name;
    std::optional<std::uint64_t> seed_override;
    std::optional<double> noise_override, alpha_override;
    std::optional<int> max_iters_override;
    int threads = 0;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        auto* opt = cmd->add_option("--config", config_path, "configuration file (JSON)");
        if (needs_config) opt->required();
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--threads", threads, "worker threads (0 = all cores)");
        cmd->add_option_function<std::uint64_t>(
            "--seed", [&](std::uint64_t v) { seed_override = v; }, "seed override");
    };

    CLI::App* simulate = app.add_subcommand("simulate", "generate synthetic measurements");
    add_common(simulate, true);
    simulate->add_option_function<double>(
        "--noise", [&](double v) { noise_override = v; }, "noise fraction override");

    CLI::App* invert = app.add_subcommand("invert", "solve A f = D from a measurement file");
    add_common(invert, true);
    invert->add_option("--measurements", measurements_path, "measurements.csv path")
        ->required();
    invert->add_option("--method", method_override, "tikhonov | tv | cgls");
    invert->add_option_function<double>(
        "--alpha", [&](double v) { alpha_override = v; }, "penalty weight override");
    invert->add_option_function<int>(
        "--max-iters", [&](int v) { max_iters_override = v; }, "iteration cap override");

    CLI::App* project_cmd = app.add_subcommand("project", "levelset-average a source");
    add_common(project_cmd, true);

    CLI::App* experiment = app.add_subcommand("experiment", "run a named study");
    experiment->add_option("name", experiment_name, "example1 | example2 | plateau | limited-data")
        ->required();
    add_common(experiment, false);
    experiment->add_option("--method", method_override, "tikhonov | tv | cgls");
    experiment->add_option_function<double>(
        "--alpha", [&](double v) { alpha_override = v; }, "penalty weight override");
    experiment->add_option_function<double>(
        "--noise", [&](double v) { noise_override = v; }, "noise fraction override");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        if (err.get_exit_code() == 0) return app.exit(err);  // --help
        std::cerr << err.what() << "\n";
        return 2;
    }

    try {
        if (experiment->parsed()) {
            ExperimentOverrides overrides;
            overrides.seed = seed_override;
            overrides.noise = noise_override;
            overrides.alpha = alpha_override;
            if (!method_override.empty()) overrides.method = method_override;
            overrides.threads = threads;
            std::filesystem::path dir =
                out_dir == "." ? std::filesystem::path("report_" + experiment_name)
                               : std::filesystem::path(out_dir);
            return cmd_experiment(experiment_name, dir, overrides);
        }

        ProblemConfig config = load_config(config_path);
        if (seed_override) config.seed = *seed_override;
        if (noise_override) config.noise_fraction = *noise_override;
        if (alpha_override) config.reg.alpha = *alpha_override;
        if (!method_override.empty()) config.method = method_override;
        if (max_iters_override) {
            if (*max_iters_override < 1)
                throw std::invalid_argument("--max-iters must be at least 1");
            config.reg.tv_max_iters = *max_iters_override;
            config.reg.cgls_max_iters = *max_iters_override;
        }

        if (simulate->parsed()) return cmd_simulate(config, out_dir, config.panels);
        if (invert->parsed()) return cmd_invert(config, measurements_path, out_dir, threads);
        if (project_cmd->parsed()) return cmd_project(config, out_dir, threads);
        std::cerr << "no subcommand selected\n";
        return 2;
    } catch (const IoError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 3;
    } catch (const SchemaError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
}
