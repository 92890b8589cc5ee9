#include "specrec/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace specrec {

namespace {

void check_system(const Eigen::MatrixXd& a, const Eigen::VectorXd& d) {
    if (a.rows() == 0 || a.cols() == 0)
        throw std::invalid_argument("solver: empty system matrix");
    if (a.rows() != d.size())
        throw std::invalid_argument("solver: right-hand side length must match matrix rows");
    if (!a.allFinite() || !d.allFinite())
        throw std::invalid_argument("solver: system entries must be finite");
}

// forward-difference operator scaled by 1/h, (n-1) x n
Eigen::MatrixXd difference_operator(Eigen::Index n, double h) {
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n - 1, n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        l(i, i) = -1.0 / h;
        l(i, i + 1) = 1.0 / h;
    }
    return l;
}

double tv_objective(const Eigen::MatrixXd& a, const Eigen::VectorXd& d,
                    const Eigen::VectorXd& f, const Eigen::MatrixXd& l, double alpha,
                    double h, double eps) {
    double fit = (a * f - d).squaredNorm();
    Eigen::VectorXd grad = l * f;
    double penalty = 0.0;
    for (Eigen::Index i = 0; i < grad.size(); ++i)
        penalty += std::sqrt(grad[i] * grad[i] + eps * eps) * h;
    return fit + alpha * penalty;
}

}  // namespace

SolveReport solve_tikhonov(const Eigen::MatrixXd& a, const Eigen::VectorXd& d, double alpha) {
    check_system(a, d);
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw std::invalid_argument("tikhonov: alpha must be positive and finite");

    Eigen::Index m = a.rows(), n = a.cols();
    Eigen::MatrixXd augmented(m + n, n);
    augmented.topRows(m) = a;
    augmented.bottomRows(n) = std::sqrt(alpha) * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + n);
    rhs.head(m) = d;

    SolveReport report;
    report.method = "tikhonov";
    report.solution = augmented.householderQr().solve(rhs);
    if (!report.solution.allFinite())
        throw std::runtime_error("tikhonov: factorization produced non-finite solution");

    Eigen::VectorXd atd = a.transpose() * d;
    Eigen::VectorXd normal_resid =
        a.transpose() * (a * report.solution) + alpha * report.solution - atd;
    double denom = atd.norm();
    report.normal_eq_residual = normal_resid.norm() / (denom > 0.0 ? denom : 1.0);
    report.residual_norm = (a * report.solution - d).norm();
    report.objective_history = {report.residual_norm * report.residual_norm +
                                alpha * report.solution.squaredNorm()};
    report.iterations = 1;
    report.converged = report.normal_eq_residual < 1e-8;
    return report;
}

SolveReport solve_tikhonov(const TheoryMatrix& a, const Eigen::VectorXd& d, double alpha) {
    return solve_tikhonov(a.entries, d, alpha);
}

SolveReport solve_tv(const Eigen::MatrixXd& a, const Eigen::VectorXd& d, double alpha,
                     double h, const RegularizationConfig& cfg) {
    check_system(a, d);
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw std::invalid_argument("tv: alpha must be positive and finite");
    if (!(h > 0.0) || !std::isfinite(h))
        throw std::invalid_argument("tv: grid spacing must be positive and finite");
    if (!(cfg.tv_smoothing > 0.0))
        throw std::invalid_argument("tv: smoothing must be positive");
    if (cfg.tv_max_iters < 1)
        throw std::invalid_argument("tv: need at least one iteration");
    if (a.cols() < 2)
        throw std::invalid_argument("tv: need at least two unknowns for a derivative penalty");

    Eigen::Index n = a.cols();
    double eps = cfg.tv_smoothing;
    Eigen::MatrixXd l = difference_operator(n, h);
    Eigen::MatrixXd ata = a.transpose() * a;
    Eigen::VectorXd atd = a.transpose() * d;

    SolveReport report;
    report.method = "tv";
    Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
    report.objective_history.push_back(tv_objective(a, d, f, l, alpha, h, eps));
    report.converged = false;
    for (int iteration = 1; iteration <= cfg.tv_max_iters; ++iteration) {
        Eigen::VectorXd grad = l * f;
        Eigen::VectorXd weights(grad.size());
        for (Eigen::Index i = 0; i < grad.size(); ++i)
            weights[i] = 1.0 / std::sqrt(grad[i] * grad[i] + eps * eps);
        Eigen::MatrixXd system =
            ata + (alpha * h / 2.0) * (l.transpose() * weights.asDiagonal() * l);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
        if (ldlt.info() != Eigen::Success)
            throw std::runtime_error("tv: reweighted system factorization failed");
        Eigen::VectorXd next = ldlt.solve(atd);
        if (!next.allFinite())
            throw std::runtime_error("tv: reweighted solve produced non-finite iterate");

        double change = (next - f).norm();
        double scale = f.norm();
        f = next;
        report.iterations = iteration;
        report.objective_history.push_back(tv_objective(a, d, f, l, alpha, h, eps));
        if (change <= cfg.tv_tol * (scale > 0.0 ? scale : 1.0)) {
            report.converged = true;
            break;
        }
    }
    report.solution = f;
    report.residual_norm = (a * f - d).norm();
    return report;
}

SolveReport solve_tv(const TheoryMatrix& a, const Eigen::VectorXd& d, double alpha,
                     const RegularizationConfig& cfg) {
    return solve_tv(a.entries, d, alpha, a.basis.spacing(), cfg);
}

SolveReport solve_cgls(const Eigen::MatrixXd& a, const Eigen::VectorXd& d,
                       const RegularizationConfig& cfg, std::optional<double> sigma_est) {
    check_system(a, d);
    if (cfg.cgls_max_iters < 1)
        throw std::invalid_argument("cgls: need at least one iteration");
    if (sigma_est && (!(*sigma_est >= 0.0) || !std::isfinite(*sigma_est)))
        throw std::invalid_argument("cgls: sigma estimate must be finite and nonnegative");

    double target = sigma_est ? cfg.discrepancy_tau * *sigma_est *
                                    std::sqrt(static_cast<double>(a.rows()))
                              : -1.0;

    SolveReport report;
    report.method = "cgls";
    Eigen::VectorXd f = Eigen::VectorXd::Zero(a.cols());
    Eigen::VectorXd r = d;
    Eigen::VectorXd s = a.transpose() * r;
    Eigen::VectorXd p = s;
    double gamma = s.squaredNorm();
    report.residual_norm = r.norm();
    report.objective_history.push_back(report.residual_norm);

    if (gamma == 0.0) {  // d already orthogonal to the range: f = 0 is optimal
        report.solution = f;
        return report;
    }
    for (int k = 1; k <= cfg.cgls_max_iters; ++k) {
        Eigen::VectorXd q = a * p;
        double qq = q.squaredNorm();
        if (qq == 0.0) {
            report.converged = false;  // direction in the null space: breakdown
            break;
        }
        double step = gamma / qq;
        f += step * p;
        r -= step * q;
        report.iterations = k;
        report.residual_norm = r.norm();
        report.objective_history.push_back(report.residual_norm);
        if (sigma_est && report.residual_norm <= target) break;
        s = a.transpose() * r;
        double gamma_next = s.squaredNorm();
        if (gamma_next == 0.0) break;  // normal equations solved exactly
        p = s + (gamma_next / gamma) * p;
        gamma = gamma_next;
    }
    report.solution = f;
    return report;
}

SolveReport solve_cgls(const TheoryMatrix& a, const Eigen::VectorXd& d,
                       const RegularizationConfig& cfg, std::optional<double> sigma_est) {
    return solve_cgls(a.entries, d, cfg, sigma_est);
}

double select_alpha_discrepancy(std::string_view method, const Eigen::MatrixXd& a,
                                const Eigen::VectorXd& d, double sigma,
                                std::span<const double> alpha_grid, double h,
                                const RegularizationConfig& cfg) {
    check_system(a, d);
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw std::invalid_argument("select_alpha: sigma must be positive and finite");
    if (alpha_grid.empty())
        throw std::invalid_argument("select_alpha: alpha grid must be nonempty");
    if (method != "tikhonov" && method != "tv")
        throw std::invalid_argument(
            "select_alpha: method must be alpha-parameterized (tikhonov or tv)");
    for (double alpha : alpha_grid)
        if (!(alpha > 0.0) || !std::isfinite(alpha))
            throw std::invalid_argument("select_alpha: grid values must be positive and finite");

    double bound = cfg.discrepancy_tau * sigma * std::sqrt(static_cast<double>(a.rows()));
    double best_qualifying = -1.0;
    double closest_alpha = alpha_grid[0];
    double closest_gap = std::numeric_limits<double>::infinity();
    for (double alpha : alpha_grid) {
        SolveReport report = method == "tikhonov" ? solve_tikhonov(a, d, alpha)
                                                  : solve_tv(a, d, alpha, h, cfg);
        if (report.residual_norm <= bound)
            best_qualifying = std::max(best_qualifying, alpha);
        double gap = std::abs(report.residual_norm - bound);
        if (gap < closest_gap) {
            closest_gap = gap;
            closest_alpha = alpha;
        }
    }
    return best_qualifying > 0.0 ? best_qualifying : closest_alpha;
}

double select_alpha_discrepancy(std::string_view method, const TheoryMatrix& a,
                                const Eigen::VectorXd& d, double sigma,
                                std::span<const double> alpha_grid,
                                const RegularizationConfig& cfg) {
    return select_alpha_discrepancy(method, a.entries, d, sigma, alpha_grid,
                                    a.basis.spacing(), cfg);
}

}  // namespace specrec
