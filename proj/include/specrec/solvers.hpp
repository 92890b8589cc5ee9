#ifndef SPECREC_SOLVERS_HPP
#define SPECREC_SOLVERS_HPP

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "specrec/theory_matrix.hpp"

namespace specrec {

struct RegularizationConfig {
    double alpha = 1e-4;          // penalty weight
    double tv_smoothing = 1e-6;   // epsilon in the smoothed absolute value
    int tv_max_iters = 200;
    double tv_tol = 1e-8;         // relative-change stopping threshold
    int cgls_max_iters = 50;
    double discrepancy_tau = 1.0;  // 0 disables the CGLS discrepancy stop
};

struct SolveReport {
    Eigen::VectorXd solution;
    std::vector<double> objective_history;  // per-iteration objective (TV) or residual (CGLS)
    double residual_norm = 0.0;             // final ||A f - D||
    int iterations = 0;
    std::string method;
    bool converged = true;
    double normal_eq_residual = 0.0;  // ||(AtA+aI)f - AtD|| / ||AtD||, Tikhonov only
};

/// Minimize ||A f - D||^2 + alpha ||f||^2 by QR on the augmented system
/// [A; sqrt(alpha) I] f = [D; 0]; the normal equations are never formed for
/// the solve, only to verify the result (normal_eq_residual < 1e-8).
SolveReport solve_tikhonov(const Eigen::MatrixXd& a, const Eigen::VectorXd& d, double alpha);
SolveReport solve_tikhonov(const TheoryMatrix& a, const Eigen::VectorXd& d, double alpha);

/// Minimize ||A f - D||^2 + alpha sum_i sqrt(((f_{i+1}-f_i)/h)^2 + eps^2) h
/// by lagged-diffusivity reweighting: repeatedly solve the weighted normal
/// system (AtA + (alpha h/2) Lt W L) f = At D with L the forward-difference
/// operator scaled by 1/h and W = diag(1/sqrt((Lf)_i^2 + eps^2)). Each step
/// minimizes a majorizer of the objective, so the recorded objective values
/// never increase. Stops on relative change < tv_tol; hitting tv_max_iters
/// flags the report and returns the latest iterate.
SolveReport solve_tv(const Eigen::MatrixXd& a, const Eigen::VectorXd& d, double alpha,
                     double h, const RegularizationConfig& cfg);
SolveReport solve_tv(const TheoryMatrix& a, const Eigen::VectorXd& d, double alpha,
                     const RegularizationConfig& cfg);

/// Conjugate gradients on the normal equations (Hestenes-Stiefel), started
/// from f = 0. Residual norms are recorded per iteration and are
/// nonincreasing. Stops at cgls_max_iters, or earlier by the discrepancy
/// principle ||A f_k - D|| <= tau sigma_est sqrt(M) when sigma_est is given;
/// a zero-direction breakdown flags the report.
SolveReport solve_cgls(const Eigen::MatrixXd& a, const Eigen::VectorXd& d,
                       const RegularizationConfig& cfg,
                       std::optional<double> sigma_est = std::nullopt);
SolveReport solve_cgls(const TheoryMatrix& a, const Eigen::VectorXd& d,
                       const RegularizationConfig& cfg,
                       std::optional<double> sigma_est = std::nullopt);

/// Largest alpha in the grid whose solution satisfies the discrepancy bound
/// ||A f - D|| <= tau sigma sqrt(M); if none does, the alpha coming closest
/// to the bound. method is "tikhonov" or "tv".
double select_alpha_discrepancy(std::string_view method, const Eigen::MatrixXd& a,
                                const Eigen::VectorXd& d, double sigma,
                                std::span<const double> alpha_grid, double h,
                                const RegularizationConfig& cfg = {});
double select_alpha_discrepancy(std::string_view method, const TheoryMatrix& a,
                                const Eigen::VectorXd& d, double sigma,
                                std::span<const double> alpha_grid,
                                const RegularizationConfig& cfg = {});

}  // namespace specrec

#endif
