#ifndef SPECREC_EXPERIMENTS_HPP
#define SPECREC_EXPERIMENTS_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "specrec/model.hpp"
#include "specrec/projection.hpp"
#include "specrec/solvers.hpp"

namespace specrec {

/// Everything needed to reproduce one synthetic study end to end.
struct ExperimentSpec {
    ExperimentSpec(std::string name, AttenuationExponent p, SourceFunction rho0);

    std::string name;
    AttenuationExponent p;
    SourceFunction rho0;
    int measurement_count = 300;          // M
    int basis_size = 400;                 // N
    double lambda_lo = 0.0;               // frequencies drawn strictly inside
    double lambda_hi = 1.0;               // (lambda_lo, lambda_hi) ⊆ (0,1)
    double noise_fraction = 0.005;
    std::vector<std::string> methods{"tikhonov"};
    /// Per-method penalty weights aligned with `methods`; empty means every
    /// method uses config.alpha.
    std::vector<double> method_alphas;
    /// When > 0, the penalty weights above are understood as calibrated at
    /// this noise fraction and are rescaled by (noise_fraction / reference)^2
    /// before solving (floored at 1e-12), the usual variance-proportional
    /// rule. Zero means the weights are absolute.
    double alpha_reference_noise = 0.0;
    RegularizationConfig config;
    int repeats = 1;
    std::uint64_t base_seed = 20260814;
    int quad_panels = 64;
    int partition_resolution = 1000;      // levelset grid for projection artifacts
    int threads = 1;
};

/// One solve: which method, which noise realization, and how it did.
struct SolutionRecord {
    std::string method;
    int run = 0;
    double relative_error = 0.0;
    bool converged = true;
    Eigen::VectorXd coeffs;
};

struct MethodSummary {
    std::string method;
    int repeats = 0;
    double mean_error = 0.0;
    double variance = 0.0;  // unbiased sample variance of the per-run errors
};

/// Per-cell view of a plateau: the projection's mean there and, per method,
/// the run-0 reconstruction averaged over the same cell.
struct PlateauCellStat {
    std::size_t cell = 0;
    double level = 0.0;
    double projected_mean = 0.0;
    std::vector<std::pair<std::string, double>> solution_means;
};

struct ExperimentReport {
    std::string name;
    std::vector<double> nodes;          // basis nodes
    std::vector<double> rho0_at_nodes;
    std::vector<SolutionRecord> records;       // ordered by (run, method)
    std::vector<MethodSummary> summaries;      // ordered like spec.methods
    double mean_error = 0.0;                   // aggregate of the first method
    double variance = 0.0;
    std::optional<LevelsetPartition> partition;     // plateau studies only
    std::vector<double> projection_at_nodes;        // P rho0 at the nodes
    std::vector<PlateauCellStat> plateau_stats;
};

/// One row of the shrinking-frequency-window table.
struct LimitedDataRow {
    double lambda_lo = 0.0, lambda_hi = 1.0;
    int repeats = 0;
    double mean_error = 0.0;
    double variance = 0.0;
    std::vector<double> run_errors;
};

/// Discrete l2 distance to rho0 sampled at the basis nodes, relative to the
/// sampled norm.
double relative_error(const Eigen::VectorXd& f, const std::function<double(double)>& rho0,
                      const HatBasis& basis);

/// Simulate with the exact model, assemble the theory matrix independently,
/// solve with every requested method, and aggregate per-run errors. Run i
/// draws its noise from a seed derived from base_seed and i, so the report
/// is reproducible and runs may execute concurrently.
ExperimentReport run_example(const ExperimentSpec& spec);

/// run_example plus levelset artifacts: the partition of p, P rho0, and per
/// plateau cell the projection mean next to each method's solution average.
ExperimentReport run_plateau_study(const ExperimentSpec& spec);

/// Tikhonov statistics over `repeats` noise realizations for each frequency
/// window, all other settings shared. The seed for (window i, run r) is
/// derived in two stages: base_seed mixed with i, then with r.
std::vector<LimitedDataRow> run_limited_data_study(
    std::span<const std::pair<double, double>> intervals, int repeats,
    std::uint64_t base_seed, const RegularizationConfig& config, int threads = 1);

/// Write report.csv, runs/run_<i>.csv, fig_<name>.svg and, when a partition
/// is attached, partition.csv under the given directory.
void write_report_directory(const std::filesystem::path& dir, const ExperimentReport& report);
void write_limited_data_directory(const std::filesystem::path& dir,
                                  std::span<const LimitedDataRow> rows);

/// The published studies, with regularization weights frozen after a one-off
/// discrepancy-principle calibration.
ExperimentSpec example1_spec();            // smooth source, identity exponent
ExperimentSpec example2_spec();            // discontinuous source, TV vs Tikhonov
ExperimentSpec plateau_spec();             // five-segment exponent with two plateaus
ExperimentSpec limited_data_spec(double lambda_lo, double lambda_hi);
std::vector<std::pair<double, double>> limited_data_intervals();

/// The five-segment piecewise-linear exponent with plateaus 1/3 on (0.2,0.4]
/// and 2/3 on (0.6,0.8].
AttenuationExponent plateau_attenuation();

}  // namespace specrec

#endif
