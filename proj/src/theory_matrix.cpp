#include "specrec/theory_matrix.hpp"

#include <cmath>
#include <stdexcept>

#include "specrec/parallel.hpp"
#include "specrec/quadrature.hpp"

namespace specrec {

namespace {

// Tabulated quadrature for one basis column: entry(j,k) reduces to
// sum_q weighted_phi[q] * lambda_j^{p_values[q]}.
struct ColumnPlan {
    std::vector<double> weighted_phi;  // simpson weight times phi_k at the node
    std::vector<double> p_values;
};

ColumnPlan make_column_plan(const AttenuationExponent& p, const HatBasis& basis, int k,
                            int n_panels) {
    auto [lo, hi] = basis.support(k);
    std::vector<double> cuts = p.breakpoints();
    cuts.push_back(basis.node(k));
    std::vector<double> bounds = quad::merge_breakpoints(lo, hi, cuts);

    ColumnPlan plan;
    int m = 2 * n_panels;
    plan.weighted_phi.reserve(bounds.size() * static_cast<std::size_t>(m + 1));
    plan.p_values.reserve(plan.weighted_phi.capacity());
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
        double u = bounds[i], v = bounds[i + 1];
        std::function<double(double)> pf = p.local_formula(0.5 * (u + v));
        double h = (v - u) / static_cast<double>(m);
        for (int q = 0; q <= m; ++q) {
            double x = q == m ? v : u + q * h;
            double w = (q == 0 || q == m) ? 1.0 : (q % 2 == 1 ? 4.0 : 2.0);
            plan.weighted_phi.push_back(w * (h / 3.0) * eval_hat(basis, k, x));
            plan.p_values.push_back(pf(x));
        }
    }
    return plan;
}

}  // namespace

TheoryMatrix build_theory_matrix(const AttenuationExponent& p, const HatBasis& basis,
                                 std::span<const double> lambdas, int n_panels,
                                 int n_threads) {
    if (lambdas.empty())
        throw std::invalid_argument("theory matrix: need at least one frequency");
    for (std::size_t j = 0; j < lambdas.size(); ++j) {
        if (!std::isfinite(lambdas[j]) || !(lambdas[j] > 0.0) || lambdas[j] > 1.0)
            throw std::invalid_argument("theory matrix: frequencies must lie in (0,1]");
        if (j > 0 && !(lambdas[j] > lambdas[j - 1]))
            throw std::invalid_argument("theory matrix: frequencies must be strictly increasing");
    }
    if (n_panels < 1)
        throw std::invalid_argument("theory matrix: need at least one quadrature panel");

    int n = basis.size();
    std::vector<ColumnPlan> plans;
    plans.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
        plans.push_back(make_column_plan(p, basis, k, n_panels));

    TheoryMatrix out{Eigen::MatrixXd(static_cast<Eigen::Index>(lambdas.size()), n),
                     std::vector<double>(lambdas.begin(), lambdas.end()), basis};
    parallel_for(static_cast<int>(lambdas.size()), n_threads, [&](int j) {
        double log_lambda = std::log(lambdas[static_cast<std::size_t>(j)]);
        for (int k = 0; k < n; ++k) {
            const ColumnPlan& plan = plans[static_cast<std::size_t>(k)];
            double acc = 0.0;
            for (std::size_t q = 0; q < plan.p_values.size(); ++q)
                acc += plan.weighted_phi[q] * std::exp(plan.p_values[q] * log_lambda);
            out.entries(j, k) = acc;
        }
    });
    return out;
}

std::vector<double> uniform_lambdas(int count, double lo, double hi) {
    if (count < 1) throw std::invalid_argument("uniform_lambdas: need a positive count");
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi))
        throw std::invalid_argument("uniform_lambdas: need finite bounds with lo < hi");
    std::vector<double> lambdas(static_cast<std::size_t>(count));
    for (int j = 1; j <= count; ++j)
        lambdas[static_cast<std::size_t>(j) - 1] =
            lo + static_cast<double>(j) * (hi - lo) / static_cast<double>(count + 1);
    return lambdas;
}

Eigen::VectorXd apply(const TheoryMatrix& matrix, const Eigen::VectorXd& coeffs) {
    if (coeffs.size() != matrix.entries.cols())
        throw std::invalid_argument("apply: coefficient count must match matrix columns");
    return matrix.entries * coeffs;
}

}  // namespace specrec
