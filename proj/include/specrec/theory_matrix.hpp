#ifndef SPECREC_THEORY_MATRIX_HPP
#define SPECREC_THEORY_MATRIX_HPP

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "specrec/model.hpp"

namespace specrec {

/// Discretized forward operator: entries(j,k) = int_a^b lambda_j^{p(x)}
/// phi_k(x) dx. Rows follow `lambdas`, columns follow the basis nodes.
struct TheoryMatrix {
    Eigen::MatrixXd entries;
    std::vector<double> lambdas;
    HatBasis basis;
};

/// Assemble the theory matrix with composite Simpson per smooth piece; the
/// integration for column k splits the support of phi_k at the hat's peak
/// and at every breakpoint of p. Quadrature nodes, weights, hat values and
/// p values are tabulated once per column, so a row only costs one exp per
/// node; rows are distributed over n_threads (0 = hardware default) and the
/// result is bit-identical for every thread count.
TheoryMatrix build_theory_matrix(const AttenuationExponent& p, const HatBasis& basis,
                                 std::span<const double> lambdas, int n_panels = 64,
                                 int n_threads = 1);

/// count frequencies equally spaced strictly inside (lo,hi):
/// lambda_j = lo + j (hi-lo)/(count+1), j = 1..count.
std::vector<double> uniform_lambdas(int count, double lo = 0.0, double hi = 1.0);

/// Predicted data entries * coeffs.
Eigen::VectorXd apply(const TheoryMatrix& matrix, const Eigen::VectorXd& coeffs);

}  // namespace specrec

#endif
