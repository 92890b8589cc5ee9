#ifndef SPECREC_QUADRATURE_HPP
#define SPECREC_QUADRATURE_HPP

#include <functional>
#include <span>
#include <vector>

namespace specrec::quad {

/// Composite Simpson rule over 2n panels (2n+1 points).
struct QuadratureRule {
    int n_panels = 64;
};

/// Composite Simpson value of f over [a,b] using 2*n_panels subintervals
/// (2*n_panels+1 samples). Exact for cubics, O(h^4) for C^4 integrands.
/// Throws std::invalid_argument on bad bounds and std::runtime_error (with
/// the offending abscissa in the message) on a non-finite sample.
double simpson(const std::function<double(double)>& f, double a, double b, int n_panels);

/// Sum of simpson() over each consecutive breakpoint pair. Breakpoints must
/// be strictly increasing with at least two entries. Placing integrand kinks
/// or jumps on breakpoints restores the full Simpson order.
double simpson_piecewise(const std::function<double(double)>& f,
                         std::span<const double> breakpoints, int n_panels_per_piece);

/// Sorted union of {lo, hi} and every extra point strictly inside (lo,hi).
/// Near-duplicates (within a relative tolerance of the span) are dropped so
/// no degenerate piece is produced.
std::vector<double> merge_breakpoints(double lo, double hi,
                                      std::span<const double> extra);
std::vector<double> merge_breakpoints(double lo, double hi,
                                      std::span<const double> extra1,
                                      std::span<const double> extra2);

}  // namespace specrec::quad

#endif
