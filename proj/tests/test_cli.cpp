#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "specrec/csv.hpp"
#include "specrec/model.hpp"
#include "specrec/theory_matrix.hpp"

#ifndef SPECREC_CLI_PATH
#error "SPECREC_CLI_PATH must point at the command-line binary"
#endif

using namespace specrec;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

int run_cli(const std::string& args) {
    std::string command = std::string(SPECREC_CLI_PATH) + " " + args + " 2>/dev/null";
    int status = std::system(command.c_str());
    REQUIRE(status != -1);
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

std::filesystem::path fresh_dir(const std::string& name) {
    std::filesystem::path dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

void spit(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    REQUIRE(out.good());
    out << content;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

/// Numeric rows of a comma-separated table, header skipped.
std::vector<std::vector<double>> read_table(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::vector<std::vector<double>> rows;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream fields(line);
        std::string field;
        while (std::getline(fields, field, ',')) row.push_back(csv::parse_double(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

bool same_directory_bytes(const std::filesystem::path& a, const std::filesystem::path& b) {
    std::vector<std::filesystem::path> rel_a, rel_b;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(a))
        if (entry.is_regular_file()) rel_a.push_back(std::filesystem::relative(entry, a));
    for (const auto& entry : std::filesystem::recursive_directory_iterator(b))
        if (entry.is_regular_file()) rel_b.push_back(std::filesystem::relative(entry, b));
    std::sort(rel_a.begin(), rel_a.end());
    std::sort(rel_b.begin(), rel_b.end());
    if (rel_a != rel_b) return false;
    for (const auto& rel : rel_a)
        if (slurp(a / rel) != slurp(b / rel)) return false;
    return true;
}

std::string quoted(const std::filesystem::path& path) { return "\"" + path.string() + "\""; }

const char* kSmoothConfig = R"({
  "schema_version": 1,
  "p": {"kind": "identity"},
  "rho0": {"kind": "sine"},
  "measurements": {"count": 12, "noise_fraction": 0.0}
})";

const char* kBoxConfig = R"({
  "schema_version": 1,
  "p": {"kind": "identity"},
  "rho0": {"kind": "indicator", "lo": 0.3, "hi": 0.6, "height": 0.3},
  "measurements": {"count": 300, "noise_fraction": 0.005},
  "basis": {"size": 20},
  "solver": {"method": "tv", "alpha": 1e-7}
})";

const char* kInvertConfig = R"({
  "schema_version": 1,
  "p": {"kind": "identity"},
  "rho0": {"kind": "sine"},
  "measurements": {"count": 300, "noise_fraction": 0.005},
  "basis": {"size": 400},
  "solver": {"method": "tikhonov", "alpha": 3e-6}
})";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("simulate reproduces the forward model exactly at zero noise") {
    std::filesystem::path dir = fresh_dir("specrec_cli_sim");
    std::filesystem::path config = dir / "config.json";
    spit(config, kSmoothConfig);

    std::filesystem::path out1 = dir / "first";
    REQUIRE(run_cli("simulate --config " + quoted(config) + " --out " + quoted(out1)) == 0);
    MeasurementSet data = csv::read_measurements(out1 / "measurements.csv");
    REQUIRE(data.size() == 12);
    CHECK(data.sigma() == 0.0);
    CHECK_FALSE(data.seed().has_value());

    Interval domain(0.0, 1.0);
    AttenuationExponent p =
        AttenuationExponent::closed_form(domain, [](double x) { return x; });
    SourceFunction rho0(domain, [](double x) { return std::sin(kPi * x); });
    std::vector<double> lambdas = uniform_lambdas(12);
    for (std::size_t j = 0; j < 12; ++j) {
        CHECK(data.lambdas()[j] == lambdas[j]);
        CHECK(std::abs(data.values()[j] - forward_data(p, rho0, lambdas[j])) < 1e-12);
    }

    // The same invocation produces the same bytes.
    std::filesystem::path out2 = dir / "second";
    REQUIRE(run_cli("simulate --config " + quoted(config) + " --out " + quoted(out2)) == 0);
    CHECK(slurp(out1 / "measurements.csv") == slurp(out2 / "measurements.csv"));
}

TEST_CASE("simulate records the noise level and responds to seed overrides") {
    std::filesystem::path dir = fresh_dir("specrec_cli_sim_noise");
    std::filesystem::path config = dir / "config.json";
    spit(config, kSmoothConfig);

    std::filesystem::path out = dir / "noisy";
    REQUIRE(run_cli("simulate --config " + quoted(config) + " --noise 0.005 --out " +
                    quoted(out)) == 0);
    MeasurementSet noisy = csv::read_measurements(out / "measurements.csv");
    REQUIRE(noisy.seed().has_value());
    CHECK(*noisy.seed() == 20260814);  // built-in default seed

    // sigma is the noise fraction times the peak clean amplitude.
    Interval domain(0.0, 1.0);
    AttenuationExponent p =
        AttenuationExponent::closed_form(domain, [](double x) { return x; });
    SourceFunction rho0(domain, [](double x) { return std::sin(kPi * x); });
    double peak = 0.0;
    for (double lambda : uniform_lambdas(12))
        peak = std::max(peak, std::abs(forward_data(p, rho0, lambda)));
    CHECK(noisy.sigma() == doctest::Approx(0.005 * peak).epsilon(1e-14));

    std::filesystem::path out_a = dir / "seed1";
    std::filesystem::path out_b = dir / "seed2";
    std::filesystem::path out_c = dir / "seed1_again";
    REQUIRE(run_cli("simulate --config " + quoted(config) + " --noise 0.01 --seed 1 --out " +
                    quoted(out_a)) == 0);
    REQUIRE(run_cli("simulate --config " + quoted(config) + " --noise 0.01 --seed 2 --out " +
                    quoted(out_b)) == 0);
    REQUIRE(run_cli("simulate --config " + quoted(config) + " --noise 0.01 --seed 1 --out " +
                    quoted(out_c)) == 0);
    CHECK(slurp(out_a / "measurements.csv") != slurp(out_b / "measurements.csv"));
    CHECK(slurp(out_a / "measurements.csv") == slurp(out_c / "measurements.csv"));
}

TEST_CASE("invert recovers the smooth source from noisy measurements") {
    std::filesystem::path dir = fresh_dir("specrec_cli_invert");
    std::filesystem::path config = dir / "config.json";
    spit(config, kInvertConfig);

    REQUIRE(run_cli("simulate --config " + quoted(config) + " --out " + quoted(dir)) == 0);
    REQUIRE(run_cli("invert --config " + quoted(config) + " --measurements " +
                    quoted(dir / "measurements.csv") + " --out " + quoted(dir)) == 0);

    std::vector<std::vector<double>> solution = read_table(dir / "solution.csv");
    REQUIRE(solution.size() == 400);
    double diff = 0.0, norm = 0.0;
    for (const auto& row : solution) {
        double reference = std::sin(kPi * row[0]);
        diff += (row[1] - reference) * (row[1] - reference);
        norm += reference * reference;
    }
    // Wiring check only; the statistical error bands are covered by the
    // experiment studies, which average over several noise draws.
    CHECK(std::sqrt(diff / norm) < 0.25);

    std::string report = slurp(dir / "solve_report.txt");
    CHECK(report.find("method=tikhonov") != std::string::npos);
    CHECK(report.find("converged=1") != std::string::npos);
}

TEST_CASE("invert with the tv method localizes both jumps of a box source") {
    std::filesystem::path dir = fresh_dir("specrec_cli_tv");
    std::filesystem::path config = dir / "config.json";
    spit(config, kBoxConfig);

    REQUIRE(run_cli("simulate --config " + quoted(config) + " --out " + quoted(dir)) == 0);
    REQUIRE(run_cli("invert --config " + quoted(config) + " --measurements " +
                    quoted(dir / "measurements.csv") + " --max-iters 500 --out " +
                    quoted(dir)) == 0);

    std::vector<std::vector<double>> solution = read_table(dir / "solution.csv");
    REQUIRE(solution.size() == 20);
    const double h = 1.0 / 19.0;
    double up = 0.0, down = 0.0, up_at = 0.0, down_at = 0.0;
    for (std::size_t k = 0; k + 1 < solution.size(); ++k) {
        double step = solution[k + 1][1] - solution[k][1];
        double mid = 0.5 * (solution[k][0] + solution[k + 1][0]);
        if (step > up) {
            up = step;
            up_at = mid;
        }
        if (step < down) {
            down = step;
            down_at = mid;
        }
    }
    CHECK(std::abs(up_at - 0.3) <= 2.0 * h);
    CHECK(std::abs(down_at - 0.6) <= 2.0 * h);
    CHECK(slurp(dir / "solve_report.txt").find("method=tv") != std::string::npos);
}

TEST_CASE("invert reports non-convergence through its exit code") {
    std::filesystem::path dir = fresh_dir("specrec_cli_noconv");
    std::filesystem::path config = dir / "config.json";
    spit(config, kBoxConfig);
    REQUIRE(run_cli("simulate --config " + quoted(config) + " --out " + quoted(dir)) == 0);
    // One reweighting pass cannot satisfy the tv stopping rule here.
    CHECK(run_cli("invert --config " + quoted(config) + " --measurements " +
                  quoted(dir / "measurements.csv") + " --max-iters 1 --out " +
                  quoted(dir)) == 4);
}

TEST_CASE("usage and configuration problems exit with code 2, io with 3") {
    std::filesystem::path dir = fresh_dir("specrec_cli_errors");
    std::filesystem::path config = dir / "config.json";
    spit(config, kBoxConfig);

    // Missing config file: an io failure.
    CHECK(run_cli("simulate --config " + quoted(dir / "nope.json") + " --out " +
                  quoted(dir)) == 3);
    // Malformed JSON.
    std::filesystem::path broken = dir / "broken.json";
    spit(broken, "{ nope");
    CHECK(run_cli("simulate --config " + quoted(broken) + " --out " + quoted(dir)) == 2);
    // Unknown top-level key.
    std::filesystem::path extra = dir / "extra.json";
    spit(extra, R"({"schema_version": 1, "surprise": {}})");
    CHECK(run_cli("simulate --config " + quoted(extra) + " --out " + quoted(dir)) == 2);
    // Wrong schema version.
    std::filesystem::path wrong = dir / "wrong_version.json";
    spit(wrong, R"({"schema_version": 2})");
    CHECK(run_cli("simulate --config " + quoted(wrong) + " --out " + quoted(dir)) == 2);
    // --config is mandatory for the config-driven subcommands.
    CHECK(run_cli("simulate --out " + quoted(dir)) == 2);
    // Iteration caps below one are rejected up front.
    REQUIRE(run_cli("simulate --config " + quoted(config) + " --out " + quoted(dir)) == 0);
    CHECK(run_cli("invert --config " + quoted(config) + " --measurements " +
                  quoted(dir / "measurements.csv") + " --max-iters 0 --out " +
                  quoted(dir)) == 2);
    // Unknown method override.
    CHECK(run_cli("invert --config " + quoted(config) + " --measurements " +
                  quoted(dir / "measurements.csv") + " --method lasso --out " +
                  quoted(dir)) == 2);
    // Missing measurement file.
    CHECK(run_cli("invert --config " + quoted(config) + " --measurements " +
                  quoted(dir / "absent.csv") + " --out " + quoted(dir)) == 3);
    // Unknown experiment name.
    CHECK(run_cli("experiment nosuch --out " + quoted(dir / "report")) == 2);
}

TEST_CASE("project passes injective regions through and averages plateaus") {
    std::filesystem::path dir = fresh_dir("specrec_cli_project");

    // An even exponent on a symmetric interval kills the odd source almost
    // everywhere; only the contiguous cell around zero passes through.
    std::filesystem::path square = dir / "square.json";
    spit(square, R"({
  "schema_version": 1,
  "interval": {"a": -1.0, "b": 1.0},
  "p": {"kind": "square"},
  "rho0": {"kind": "affine", "slope": 1.0, "intercept": 0.0},
  "projection": {"grid_resolution": 200}
})");
    std::filesystem::path out_sq = dir / "square_out";
    REQUIRE(run_cli("project --config " + quoted(square) + " --out " + quoted(out_sq)) == 0);
    CHECK(std::filesystem::exists(out_sq / "partition.csv"));
    std::vector<std::vector<double>> rows = read_table(out_sq / "projection.csv");
    REQUIRE(rows.size() == 201);
    for (const auto& row : rows) {
        if (std::abs(row[0]) > 0.02)
            CHECK(std::abs(row[2]) < 1e-9);
        else
            CHECK(std::abs(row[2]) <= std::abs(row[0]) + 1e-9);
    }

    // An injective exponent changes nothing: both value columns agree.
    std::filesystem::path identity = dir / "identity.json";
    spit(identity, R"({
  "schema_version": 1,
  "p": {"kind": "identity"},
  "rho0": {"kind": "sine"},
  "projection": {"grid_resolution": 100}
})");
    std::filesystem::path out_id = dir / "identity_out";
    REQUIRE(run_cli("project --config " + quoted(identity) + " --out " + quoted(out_id)) ==
            0);
    for (const auto& row : read_table(out_id / "projection.csv")) CHECK(row[1] == row[2]);

    // Plateau segments replace the sine by its levelset mean 5/(2 pi).
    std::filesystem::path plateau = dir / "plateau.json";
    spit(plateau, R"({
  "schema_version": 1,
  "p": {"kind": "affine_segments", "segments": [
    {"lo": 0.0, "hi": 0.2, "slope": 1.6666666666666667},
    {"lo": 0.2, "hi": 0.4, "plateau": 0.3333333333333333},
    {"lo": 0.4, "hi": 0.6, "slope": 1.6666666666666667, "intercept": -0.3333333333333333},
    {"lo": 0.6, "hi": 0.8, "plateau": 0.6666666666666666},
    {"lo": 0.8, "hi": 1.0, "slope": 1.6666666666666667, "intercept": -0.6666666666666666}
  ]},
  "rho0": {"kind": "sine"}
})");
    std::filesystem::path out_pl = dir / "plateau_out";
    REQUIRE(run_cli("project --config " + quoted(plateau) + " --out " + quoted(out_pl)) ==
            0);
    const double sigma_mean = 0.79577471545947667884;
    bool saw_lower = false, saw_upper = false;
    for (const auto& row : read_table(out_pl / "projection.csv")) {
        if (std::abs(row[0] - 0.3) < 1e-12) {
            CHECK(row[2] == doctest::Approx(sigma_mean).epsilon(1e-6));
            saw_lower = true;
        }
        if (std::abs(row[0] - 0.7) < 1e-12) {
            CHECK(row[2] == doctest::Approx(sigma_mean).epsilon(1e-6));
            saw_upper = true;
        }
    }
    CHECK(saw_lower);
    CHECK(saw_upper);
}

TEST_CASE("experiment reports are identical across threads and reruns") {
    std::filesystem::path dir = fresh_dir("specrec_cli_exp");
    std::filesystem::path a = dir / "a";
    std::filesystem::path b = dir / "b";
    std::filesystem::path c = dir / "c";
    REQUIRE(run_cli("experiment example1 --threads 1 --out " + quoted(a)) == 0);
    REQUIRE(run_cli("experiment example1 --threads 3 --out " + quoted(b)) == 0);
    REQUIRE(run_cli("experiment example1 --threads 1 --out " + quoted(c)) == 0);
    CHECK(same_directory_bytes(a, b));
    CHECK(same_directory_bytes(a, c));
    CHECK(std::filesystem::exists(a / "fig_example1.svg"));
}

TEST_CASE("experiment overrides adjust noise, method, and weight") {
    std::filesystem::path dir = fresh_dir("specrec_cli_exp_override");

    // Exact data sends the smooth-study error near zero. The summary rows
    // lead with the method name, so the numeric fields are picked by hand.
    std::filesystem::path clean = dir / "clean";
    REQUIRE(run_cli("experiment example1 --noise 0 --out " + quoted(clean)) == 0);
    std::string summary = slurp(clean / "report.csv");
    std::size_t row = summary.find("tikhonov,");
    REQUIRE(row != std::string::npos);
    std::stringstream fields(summary.substr(row));
    std::string method, runs, mean;
    REQUIRE(std::getline(fields, method, ','));
    REQUIRE(std::getline(fields, runs, ','));
    REQUIRE(std::getline(fields, mean, ','));
    CHECK(runs == "4");
    CHECK(csv::parse_double(mean) < 0.02);

    // --method collapses the method list; the summary then has one row.
    std::filesystem::path forced = dir / "forced";
    REQUIRE(run_cli("experiment example2 --method tikhonov --alpha 1e-6 --noise 0 --out " +
                    quoted(forced)) == 0);
    std::string text = slurp(forced / "report.csv");
    CHECK(text.find("tikhonov,1,") != std::string::npos);
    CHECK(text.find("tv,") == std::string::npos);
}

}  // TEST_SUITE
