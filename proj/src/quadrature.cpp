#include "specrec/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace specrec::quad {

namespace {

double sample(const std::function<double(double)>& f, double x) {
    const double v = f(x);
    if (!std::isfinite(v)) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "non-finite integrand value at x = " << x;
        throw std::runtime_error(msg.str());
    }
    return v;
}

}  // namespace

double simpson(const std::function<double(double)>& f, double a, double b, int n_panels) {
    if (!(a < b) || !std::isfinite(a) || !std::isfinite(b))
        throw std::invalid_argument("simpson: require finite a < b");
    if (n_panels < 1)
        throw std::invalid_argument("simpson: n_panels must be >= 1");

    const int m = 2 * n_panels;  // subintervals
    const double h = (b - a) / m;

    double ends = sample(f, a) + sample(f, b);
    double odd = 0.0, even = 0.0;
    for (int i = 1; i < m; i += 2) odd += sample(f, a + i * h);
    for (int i = 2; i < m; i += 2) even += sample(f, a + i * h);
    return (h / 3.0) * (ends + 4.0 * odd + 2.0 * even);
}

double simpson_piecewise(const std::function<double(double)>& f,
                         std::span<const double> breakpoints, int n_panels_per_piece) {
    if (breakpoints.size() < 2)
        throw std::invalid_argument("simpson_piecewise: need at least two breakpoints");
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
        if (!(breakpoints[i] < breakpoints[i + 1]))
            throw std::invalid_argument("simpson_piecewise: breakpoints must be strictly increasing");

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
        total += simpson(f, breakpoints[i], breakpoints[i + 1], n_panels_per_piece);
    return total;
}

std::vector<double> merge_breakpoints(double lo, double hi,
                                      std::span<const double> extra1,
                                      std::span<const double> extra2) {
    if (!(lo < hi)) throw std::invalid_argument("merge_breakpoints: require lo < hi");
    std::vector<double> pts;
    pts.reserve(extra1.size() + extra2.size() + 2);
    pts.push_back(lo);
    for (double x : extra1)
        if (x > lo && x < hi) pts.push_back(x);
    for (double x : extra2)
        if (x > lo && x < hi) pts.push_back(x);
    pts.push_back(hi);
    std::sort(pts.begin(), pts.end());

    // Drop points closer than a sliver of the span; keeps pieces non-degenerate.
    const double tol = (hi - lo) * 1e-14;
    std::vector<double> out;
    out.reserve(pts.size());
    out.push_back(pts.front());
    for (std::size_t i = 1; i + 1 < pts.size(); ++i)
        if (pts[i] - out.back() > tol && hi - pts[i] > tol) out.push_back(pts[i]);
    out.push_back(hi);
    return out;
}

std::vector<double> merge_breakpoints(double lo, double hi, std::span<const double> extra) {
    return merge_breakpoints(lo, hi, extra, {});
}

}  // namespace specrec::quad
