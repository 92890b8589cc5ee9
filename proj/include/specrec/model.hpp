#ifndef SPECREC_MODEL_HPP
#define SPECREC_MODEL_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace specrec {

/// Open-in-spirit interval (a,b); endpoints are admitted for evaluation.
class Interval {
public:
    Interval(double a, double b);
    double a() const { return a_; }
    double b() const { return b_; }
    double length() const { return b_ - a_; }
    bool contains(double x) const { return x >= a_ && x <= b_; }

private:
    double a_, b_;
};

/// Uniform hat-function basis on [a,b]: N nodes including both endpoints,
/// spacing h = (b-a)/(N-1). Boundary hats are one-sided half hats, so the
/// basis is an exact partition of unity.
class HatBasis {
public:
    HatBasis(Interval interval, int n_nodes);
    const Interval& interval() const { return interval_; }
    int size() const { return static_cast<int>(nodes_.size()); }
    double node(int k) const { return nodes_[static_cast<std::size_t>(k)]; }
    double spacing() const { return spacing_; }
    const std::vector<double>& nodes() const { return nodes_; }
    /// Support of hat k clipped to the interval.
    std::pair<double, double> support(int k) const;

private:
    Interval interval_;
    std::vector<double> nodes_;
    double spacing_;
};

/// phi_k(x) for the 0-based node index k. Zero outside [x_{k-1}, x_{k+1}].
double eval_hat(const HatBasis& basis, int k, double x);

/// Piecewise-linear density rho(x) = sum_k f_k phi_k(x).
class DensityField {
public:
    DensityField(HatBasis basis, Eigen::VectorXd coeffs);
    const HatBasis& basis() const { return basis_; }
    const Eigen::VectorXd& coeffs() const { return coeffs_; }

private:
    HatBasis basis_;
    Eigen::VectorXd coeffs_;
};

double eval_density(const DensityField& rho, double x);

/// Node-interpolant of f on the given basis.
DensityField interpolate(const HatBasis& basis, const std::function<double(double)>& f);

/// A source density with known structure: contiguous pieces, each with its
/// own formula, plus optional kink locations (continuous but non-smooth
/// points). Integration routines split at piece bounds and kinks and always
/// evaluate the per-piece formula, so jump discontinuities are handled with
/// correct one-sided limits. Pointwise evaluation assigns a boundary point
/// to the piece on its left, i.e. piece i owns (lo_i, hi_i] (the first piece
/// also owns its left endpoint).
class SourceFunction {
public:
    struct Piece {
        double lo, hi;
        std::function<double(double)> f;
    };

    /// Single smooth formula on the whole interval.
    SourceFunction(Interval interval, std::function<double(double)> f);
    /// Explicit pieces; must tile the interval in order.
    static SourceFunction piecewise(Interval interval, std::vector<Piece> pieces);
    static SourceFunction constant(Interval interval, double value);
    /// height * indicator of (lo,hi); three pieces.
    static SourceFunction indicator(Interval interval, double lo, double hi, double height);
    /// Wraps a density field; kinks at the interior basis nodes.
    static SourceFunction from_density(const DensityField& rho);

    double operator()(double x) const;
    const Interval& interval() const { return interval_; }
    const std::vector<Piece>& pieces() const { return pieces_; }
    /// Piece bounds plus kinks, sorted, spanning [a,b].
    std::vector<double> breakpoints() const;
    /// Formula owning the subinterval around x (by construction smooth there).
    const std::function<double(double)>& piece_formula(double x_mid) const;

    SourceFunction& add_kinks(std::span<const double> kinks);

    friend SourceFunction operator+(const SourceFunction& lhs, const SourceFunction& rhs);
    friend SourceFunction operator*(double scale, const SourceFunction& rhs);

private:
    SourceFunction() : interval_(0.0, 1.0) {}
    Interval interval_;
    std::vector<Piece> pieces_;
    std::vector<double> kinks_;
};

/// Integrated attenuation p(x) = int_a^x beta. Either closed-form segments
/// (each optionally a plateau, i.e. exactly constant) or uniformly spaced
/// samples interpolated piecewise-linearly.
class AttenuationExponent {
public:
    struct Segment {
        double lo, hi;
        std::function<double(double)> f;  // may be empty when plateau is set
        std::optional<double> plateau;
    };

    static AttenuationExponent segments(Interval interval, std::vector<Segment> segs);
    static AttenuationExponent samples(Interval interval, std::vector<double> values);
    /// Whole-interval closed form without plateau structure.
    static AttenuationExponent closed_form(Interval interval, std::function<double(double)> f);
    static AttenuationExponent constant(Interval interval, double value);

    double operator()(double x) const;
    const Interval& interval() const { return interval_; }
    bool is_closed_form() const { return !segments_.empty(); }
    const std::vector<Segment>& segment_list() const { return segments_; }
    const std::vector<double>& sample_values() const { return samples_; }
    /// Segment bounds (closed form) or all sample nodes (samples), incl. a,b.
    std::vector<double> breakpoints() const;
    /// Formula valid on the subinterval around x_mid (one-sided at jumps).
    std::function<double(double)> local_formula(double x_mid) const;
    /// max - min of p over breakpoints/samples (used for tolerance defaults).
    double value_range() const;

private:
    AttenuationExponent() : interval_(0.0, 1.0) {}
    Interval interval_;
    std::vector<Segment> segments_;  // closed-form variant
    std::vector<double> samples_;    // dense-samples variant
    double sample_step_ = 0.0;
};

/// p(x) = int_a^x beta(y) dy on a uniform grid of `resolution` samples,
/// accumulated cell by cell with Simpson quadrature. p(a) = 0 exactly.
AttenuationExponent attenuation_to_p(const std::function<double(double)>& beta,
                                     Interval interval, int resolution);

/// Factorized spectral model: attenuation mu(w,x) = alpha(w) beta(x) and
/// emission f(w,x) = epsilon(w) rho(x).
struct SpectralModel {
    std::function<double(double)> alpha;    // spectral attenuation density, > 0
    std::function<double(double)> epsilon;  // spectral emission density, > 0
};

/// Frequencies lambda_j in (0,1) with data values D_j. sigma is the noise
/// standard deviation; the generator seed is recorded iff sigma > 0.
class MeasurementSet {
public:
    MeasurementSet(std::vector<double> lambdas, std::vector<double> values,
                   double sigma, std::optional<std::uint64_t> seed);
    const std::vector<double>& lambdas() const { return lambdas_; }
    const std::vector<double>& values() const { return values_; }
    double sigma() const { return sigma_; }
    std::optional<std::uint64_t> seed() const { return seed_; }
    std::size_t size() const { return lambdas_.size(); }

private:
    std::vector<double> lambdas_, values_;
    double sigma_;
    std::optional<std::uint64_t> seed_;
};

/// Reduce raw intensities M(omega) to data D(lambda) = M(eta(lambda)) /
/// epsilon(eta(lambda)) with lambda = exp(-alpha(omega)), sorted by lambda.
/// eta must be a right inverse of exp(-alpha(.)) to within 1e-10 on the
/// supplied frequencies.
MeasurementSet preprocess_measurement(const SpectralModel& model,
                                      const std::function<double(double)>& eta,
                                      std::span<const std::pair<double, double>> raw);

/// D(lambda) = int_a^b lambda^{p(x)} rho(x) dx by composite Simpson with
/// n_panels panels per piece; pieces are delimited by the breakpoints of p
/// and of rho. lambda^p is evaluated as exp(p log lambda); lambda = 1 short
/// circuits to the plain integral of rho. Requires lambda in (0,1].
double forward_data(const AttenuationExponent& p, const SourceFunction& rho,
                    double lambda, int n_panels = 64);

/// Exact-model synthetic data: D_j = forward_data(lambda_j) + e_j with
/// e_j iid N(0, sigma^2), sigma = noise_fraction * max_j |forward_data|.
/// Generation never touches the theory matrix. Deterministic given seed.
MeasurementSet simulate_measurements(const AttenuationExponent& p, const SourceFunction& rho0,
                                     std::span<const double> lambdas, double noise_fraction,
                                     std::uint64_t seed, int n_panels = 64);

}  // namespace specrec

#endif
