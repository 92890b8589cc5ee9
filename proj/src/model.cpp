#include "specrec/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "specrec/quadrature.hpp"
#include "specrec/rng.hpp"

namespace specrec {

namespace {

// Index of the piece owning x under left-open ownership (lo,hi]; the first
// piece also owns its left endpoint. bounds holds each piece's lo.
template <typename T>
std::size_t owning_index(const std::vector<T>& pieces, double x,
                         double lo_of(const T&)) {
    if (pieces.size() == 1 || x <= lo_of(pieces[1])) return 0;
    std::size_t lo = 0, hi = pieces.size() - 1;
    // invariant: lo_of(pieces[lo]) < x, and x <= lo_of(pieces[hi+1]) or hi is last
    while (lo < hi) {
        std::size_t mid = (lo + hi + 1) / 2;
        if (lo_of(pieces[mid]) < x)
            lo = mid;
        else
            hi = mid - 1;
    }
    return lo;
}

void require_same_domain(const Interval& u, const Interval& v, const char* what) {
    double tol = 1e-12 * std::max(u.length(), v.length());
    if (std::abs(u.a() - v.a()) > tol || std::abs(u.b() - v.b()) > tol) {
        std::ostringstream msg;
        msg << what << ": domain mismatch, (" << u.a() << "," << u.b() << ") vs ("
            << v.a() << "," << v.b() << ")";
        throw std::invalid_argument(msg.str());
    }
}

}  // namespace

Interval::Interval(double a, double b) : a_(a), b_(b) {
    if (!std::isfinite(a) || !std::isfinite(b) || !(a < b))
        throw std::invalid_argument("interval: endpoints must be finite with a < b");
}

HatBasis::HatBasis(Interval interval, int n_nodes) : interval_(interval) {
    if (n_nodes < 2)
        throw std::invalid_argument("hat basis: need at least two nodes");
    nodes_.resize(static_cast<std::size_t>(n_nodes));
    spacing_ = interval.length() / (n_nodes - 1);
    for (int k = 0; k < n_nodes; ++k)
        nodes_[static_cast<std::size_t>(k)] = interval.a() + k * spacing_;
    nodes_.back() = interval.b();  // guard against rounding drift
}

std::pair<double, double> HatBasis::support(int k) const {
    if (k < 0 || k >= size())
        throw std::invalid_argument("hat basis: node index out of range");
    double c = node(k);
    return {std::max(interval_.a(), c - spacing_), std::min(interval_.b(), c + spacing_)};
}

double eval_hat(const HatBasis& basis, int k, double x) {
    if (k < 0 || k >= basis.size())
        throw std::invalid_argument("eval_hat: node index out of range");
    if (!basis.interval().contains(x))
        throw std::invalid_argument("eval_hat: point outside the domain");
    double t = 1.0 - std::abs(x - basis.node(k)) / basis.spacing();
    return t > 0.0 ? t : 0.0;
}

DensityField::DensityField(HatBasis basis, Eigen::VectorXd coeffs)
    : basis_(std::move(basis)), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != basis_.size())
        throw std::invalid_argument("density field: coefficient count must match basis size");
    if (!coeffs_.allFinite())
        throw std::invalid_argument("density field: coefficients must be finite");
}

double eval_density(const DensityField& rho, double x) {
    const HatBasis& basis = rho.basis();
    if (!basis.interval().contains(x))
        throw std::invalid_argument("eval_density: point outside the domain");
    // On a uniform grid the hat expansion reduces to linear interpolation
    // between the two nodes bracketing x.
    int cell = static_cast<int>((x - basis.interval().a()) / basis.spacing());
    cell = std::clamp(cell, 0, basis.size() - 2);
    double t = (x - basis.node(cell)) / basis.spacing();
    return (1.0 - t) * rho.coeffs()[cell] + t * rho.coeffs()[cell + 1];
}

DensityField interpolate(const HatBasis& basis, const std::function<double(double)>& f) {
    Eigen::VectorXd coeffs(basis.size());
    for (int k = 0; k < basis.size(); ++k)
        coeffs[k] = f(basis.node(k));
    return DensityField(basis, std::move(coeffs));
}

SourceFunction::SourceFunction(Interval interval, std::function<double(double)> f)
    : interval_(interval) {
    if (!f) throw std::invalid_argument("source: formula must be callable");
    pieces_.push_back({interval.a(), interval.b(), std::move(f)});
}

SourceFunction SourceFunction::piecewise(Interval interval, std::vector<Piece> pieces) {
    if (pieces.empty())
        throw std::invalid_argument("source: need at least one piece");
    double tol = 1e-12 * interval.length();
    if (std::abs(pieces.front().lo - interval.a()) > tol ||
        std::abs(pieces.back().hi - interval.b()) > tol)
        throw std::invalid_argument("source: pieces must span the whole interval");
    pieces.front().lo = interval.a();
    pieces.back().hi = interval.b();
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        if (!pieces[i].f)
            throw std::invalid_argument("source: every piece needs a formula");
        if (!(pieces[i].lo < pieces[i].hi))
            throw std::invalid_argument("source: pieces must have positive width");
        if (i + 1 < pieces.size()) {
            if (std::abs(pieces[i].hi - pieces[i + 1].lo) > tol)
                throw std::invalid_argument("source: pieces must be contiguous");
            pieces[i + 1].lo = pieces[i].hi;
        }
    }
    SourceFunction out;
    out.interval_ = interval;
    out.pieces_ = std::move(pieces);
    return out;
}

SourceFunction SourceFunction::constant(Interval interval, double value) {
    return SourceFunction(interval, [value](double) { return value; });
}

SourceFunction SourceFunction::indicator(Interval interval, double lo, double hi,
                                         double height) {
    if (!(interval.a() <= lo && lo < hi && hi <= interval.b()))
        throw std::invalid_argument("source: indicator bounds must be ordered inside the domain");
    std::vector<Piece> pieces;
    auto zero = [](double) { return 0.0; };
    auto level = [height](double) { return height; };
    if (lo > interval.a()) pieces.push_back({interval.a(), lo, zero});
    pieces.push_back({lo, hi, level});
    if (hi < interval.b()) pieces.push_back({hi, interval.b(), zero});
    return piecewise(interval, std::move(pieces));
}

SourceFunction SourceFunction::from_density(const DensityField& rho) {
    SourceFunction out(rho.basis().interval(),
                       [rho](double x) { return eval_density(rho, x); });
    const auto& nodes = rho.basis().nodes();
    if (nodes.size() > 2) {
        std::vector<double> interior(nodes.begin() + 1, nodes.end() - 1);
        out.add_kinks(interior);
    }
    return out;
}

double SourceFunction::operator()(double x) const {
    if (!interval_.contains(x))
        throw std::invalid_argument("source: point outside the domain");
    std::size_t i = owning_index<Piece>(pieces_, x, [](const Piece& p) { return p.lo; });
    return pieces_[i].f(x);
}

const std::function<double(double)>& SourceFunction::piece_formula(double x_mid) const {
    if (!interval_.contains(x_mid))
        throw std::invalid_argument("source: point outside the domain");
    std::size_t i = owning_index<Piece>(pieces_, x_mid, [](const Piece& p) { return p.lo; });
    return pieces_[i].f;
}

std::vector<double> SourceFunction::breakpoints() const {
    std::vector<double> extra = kinks_;
    for (std::size_t i = 0; i + 1 < pieces_.size(); ++i)
        extra.push_back(pieces_[i].hi);
    return quad::merge_breakpoints(interval_.a(), interval_.b(), extra);
}

SourceFunction& SourceFunction::add_kinks(std::span<const double> kinks) {
    for (double x : kinks) {
        if (!std::isfinite(x))
            throw std::invalid_argument("source: kink locations must be finite");
        if (x > interval_.a() && x < interval_.b()) kinks_.push_back(x);
    }
    return *this;
}

SourceFunction operator+(const SourceFunction& lhs, const SourceFunction& rhs) {
    require_same_domain(lhs.interval_, rhs.interval_, "source sum");
    std::vector<double> cuts;
    for (std::size_t i = 0; i + 1 < lhs.pieces_.size(); ++i) cuts.push_back(lhs.pieces_[i].hi);
    for (std::size_t i = 0; i + 1 < rhs.pieces_.size(); ++i) cuts.push_back(rhs.pieces_[i].hi);
    std::vector<double> bounds =
        quad::merge_breakpoints(lhs.interval_.a(), lhs.interval_.b(), cuts);
    std::vector<SourceFunction::Piece> pieces;
    pieces.reserve(bounds.size() - 1);
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
        double mid = 0.5 * (bounds[i] + bounds[i + 1]);
        std::function<double(double)> fl = lhs.piece_formula(mid);
        std::function<double(double)> fr = rhs.piece_formula(mid);
        pieces.push_back({bounds[i], bounds[i + 1],
                          [fl, fr](double x) { return fl(x) + fr(x); }});
    }
    SourceFunction out = SourceFunction::piecewise(lhs.interval_, std::move(pieces));
    out.add_kinks(lhs.kinks_);
    out.add_kinks(rhs.kinks_);
    return out;
}

SourceFunction operator*(double scale, const SourceFunction& rhs) {
    if (!std::isfinite(scale))
        throw std::invalid_argument("source scale: factor must be finite");
    SourceFunction out = rhs;
    for (auto& piece : out.pieces_) {
        std::function<double(double)> f = std::move(piece.f);
        piece.f = [scale, f](double x) { return scale * f(x); };
    }
    return out;
}

AttenuationExponent AttenuationExponent::segments(Interval interval,
                                                  std::vector<Segment> segs) {
    if (segs.empty())
        throw std::invalid_argument("attenuation exponent: need at least one segment");
    double tol = 1e-12 * interval.length();
    if (std::abs(segs.front().lo - interval.a()) > tol ||
        std::abs(segs.back().hi - interval.b()) > tol)
        throw std::invalid_argument("attenuation exponent: segments must span the interval");
    segs.front().lo = interval.a();
    segs.back().hi = interval.b();
    for (std::size_t i = 0; i < segs.size(); ++i) {
        if (!(segs[i].lo < segs[i].hi))
            throw std::invalid_argument("attenuation exponent: segments must have positive width");
        if (segs[i].plateau && !std::isfinite(*segs[i].plateau))
            throw std::invalid_argument("attenuation exponent: plateau level must be finite");
        if (!segs[i].f) {
            if (!segs[i].plateau)
                throw std::invalid_argument(
                    "attenuation exponent: segment needs a formula or a plateau level");
            double level = *segs[i].plateau;
            segs[i].f = [level](double) { return level; };
        }
        if (i + 1 < segs.size()) {
            if (std::abs(segs[i].hi - segs[i + 1].lo) > tol)
                throw std::invalid_argument("attenuation exponent: segments must be contiguous");
            segs[i + 1].lo = segs[i].hi;
        }
    }
    AttenuationExponent out;
    out.interval_ = interval;
    out.segments_ = std::move(segs);
    return out;
}

AttenuationExponent AttenuationExponent::samples(Interval interval,
                                                 std::vector<double> values) {
    if (values.size() < 2)
        throw std::invalid_argument("attenuation exponent: need at least two samples");
    for (double v : values)
        if (!std::isfinite(v))
            throw std::invalid_argument("attenuation exponent: samples must be finite");
    AttenuationExponent out;
    out.interval_ = interval;
    out.samples_ = std::move(values);
    out.sample_step_ = interval.length() / static_cast<double>(out.samples_.size() - 1);
    return out;
}

AttenuationExponent AttenuationExponent::closed_form(Interval interval,
                                                     std::function<double(double)> f) {
    if (!f) throw std::invalid_argument("attenuation exponent: formula must be callable");
    return segments(interval, {{interval.a(), interval.b(), std::move(f), std::nullopt}});
}

AttenuationExponent AttenuationExponent::constant(Interval interval, double value) {
    return segments(interval, {{interval.a(), interval.b(), nullptr, value}});
}

double AttenuationExponent::operator()(double x) const {
    if (!interval_.contains(x))
        throw std::invalid_argument("attenuation exponent: point outside the domain");
    if (!segments_.empty()) {
        std::size_t i =
            owning_index<Segment>(segments_, x, [](const Segment& s) { return s.lo; });
        return segments_[i].f(x);
    }
    int cell = static_cast<int>((x - interval_.a()) / sample_step_);
    cell = std::clamp(cell, 0, static_cast<int>(samples_.size()) - 2);
    double left = interval_.a() + cell * sample_step_;
    double t = (x - left) / sample_step_;
    return (1.0 - t) * samples_[static_cast<std::size_t>(cell)] +
           t * samples_[static_cast<std::size_t>(cell) + 1];
}

std::vector<double> AttenuationExponent::breakpoints() const {
    std::vector<double> extra;
    if (!segments_.empty()) {
        for (std::size_t i = 0; i + 1 < segments_.size(); ++i)
            extra.push_back(segments_[i].hi);
    } else {
        for (std::size_t i = 1; i + 1 < samples_.size(); ++i)
            extra.push_back(interval_.a() + static_cast<double>(i) * sample_step_);
    }
    return quad::merge_breakpoints(interval_.a(), interval_.b(), extra);
}

std::function<double(double)> AttenuationExponent::local_formula(double x_mid) const {
    if (!interval_.contains(x_mid))
        throw std::invalid_argument("attenuation exponent: point outside the domain");
    if (!segments_.empty()) {
        std::size_t i =
            owning_index<Segment>(segments_, x_mid, [](const Segment& s) { return s.lo; });
        return segments_[i].f;
    }
    return [this](double x) { return (*this)(x); };
}

double AttenuationExponent::value_range() const {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    if (!segments_.empty()) {
        for (const Segment& seg : segments_) {
            for (int i = 0; i <= 16; ++i) {
                double x = seg.lo + (seg.hi - seg.lo) * (static_cast<double>(i) / 16.0);
                double v = seg.f(x);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
    } else {
        for (double v : samples_) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    return hi - lo;
}

AttenuationExponent attenuation_to_p(const std::function<double(double)>& beta,
                                     Interval interval, int resolution) {
    if (!beta) throw std::invalid_argument("attenuation_to_p: beta must be callable");
    if (resolution < 2)
        throw std::invalid_argument("attenuation_to_p: need at least two samples");
    std::vector<double> values(static_cast<std::size_t>(resolution));
    values[0] = 0.0;
    double step = interval.length() / static_cast<double>(resolution - 1);
    for (int i = 1; i < resolution; ++i) {
        double lo = interval.a() + (i - 1) * step;
        double hi = i + 1 == resolution ? interval.b() : interval.a() + i * step;
        values[static_cast<std::size_t>(i)] =
            values[static_cast<std::size_t>(i) - 1] + quad::simpson(beta, lo, hi, 4);
    }
    return AttenuationExponent::samples(interval, std::move(values));
}

MeasurementSet::MeasurementSet(std::vector<double> lambdas, std::vector<double> values,
                               double sigma, std::optional<std::uint64_t> seed)
    : lambdas_(std::move(lambdas)), values_(std::move(values)), sigma_(sigma), seed_(seed) {
    if (lambdas_.empty() || lambdas_.size() != values_.size())
        throw std::invalid_argument("measurements: need equally many frequencies and values");
    for (std::size_t j = 0; j < lambdas_.size(); ++j) {
        if (!(lambdas_[j] > 0.0 && lambdas_[j] < 1.0))
            throw std::invalid_argument("measurements: frequencies must lie strictly in (0,1)");
        if (j > 0 && !(lambdas_[j] > lambdas_[j - 1]))
            throw std::invalid_argument("measurements: frequencies must be strictly increasing");
        if (!std::isfinite(values_[j]))
            throw std::invalid_argument("measurements: values must be finite");
    }
    if (!(sigma_ >= 0.0) || !std::isfinite(sigma_))
        throw std::invalid_argument("measurements: sigma must be finite and nonnegative");
    if ((sigma_ > 0.0) != seed_.has_value())
        throw std::invalid_argument("measurements: seed must be recorded exactly when sigma > 0");
}

MeasurementSet preprocess_measurement(const SpectralModel& model,
                                      const std::function<double(double)>& eta,
                                      std::span<const std::pair<double, double>> raw) {
    if (!model.alpha || !model.epsilon)
        throw std::invalid_argument("preprocess: spectral model must provide alpha and epsilon");
    if (!eta) throw std::invalid_argument("preprocess: eta must be callable");
    if (raw.empty()) throw std::invalid_argument("preprocess: no raw measurements");
    std::vector<std::pair<double, double>> reduced;
    reduced.reserve(raw.size());
    for (auto [omega, intensity] : raw) {
        double lam = std::exp(-model.alpha(omega));
        if (!(lam > 0.0 && lam < 1.0)) {
            std::ostringstream msg;
            msg << "preprocess: alpha(" << omega << ") maps outside (0,1), got lambda = " << lam;
            throw std::runtime_error(msg.str());
        }
        double round_trip = std::exp(-model.alpha(eta(lam)));
        if (std::abs(round_trip - lam) > 1e-10) {
            std::ostringstream msg;
            msg << "preprocess: eta is not a right inverse at lambda = " << lam
                << " (round trip " << round_trip << ")";
            throw std::runtime_error(msg.str());
        }
        double eps = model.epsilon(omega);
        if (!(eps > 0.0)) {
            std::ostringstream msg;
            msg << "preprocess: epsilon(" << omega << ") = " << eps << " is not positive";
            throw std::runtime_error(msg.str());
        }
        reduced.emplace_back(lam, intensity / eps);
    }
    std::sort(reduced.begin(), reduced.end());
    std::vector<double> lambdas, values;
    lambdas.reserve(reduced.size());
    values.reserve(reduced.size());
    for (auto& [lam, value] : reduced) {
        lambdas.push_back(lam);
        values.push_back(value);
    }
    return MeasurementSet(std::move(lambdas), std::move(values), 0.0, std::nullopt);
}

double forward_data(const AttenuationExponent& p, const SourceFunction& rho,
                    double lambda, int n_panels) {
    require_same_domain(p.interval(), rho.interval(), "forward_data");
    if (!std::isfinite(lambda) || !(lambda > 0.0) || lambda > 1.0)
        throw std::invalid_argument("forward_data: lambda must lie in (0,1]");
    std::vector<double> bounds = quad::merge_breakpoints(
        p.interval().a(), p.interval().b(), p.breakpoints(), rho.breakpoints());
    double total = 0.0;
    double log_lambda = std::log(lambda);
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
        double u = bounds[i], v = bounds[i + 1];
        double mid = 0.5 * (u + v);
        const std::function<double(double)>& rf = rho.piece_formula(mid);
        if (lambda == 1.0) {
            total += quad::simpson(rf, u, v, n_panels);
            continue;
        }
        std::function<double(double)> pf = p.local_formula(mid);
        total += quad::simpson(
            [&](double x) { return std::exp(pf(x) * log_lambda) * rf(x); }, u, v, n_panels);
    }
    return total;
}

MeasurementSet simulate_measurements(const AttenuationExponent& p, const SourceFunction& rho0,
                                     std::span<const double> lambdas, double noise_fraction,
                                     std::uint64_t seed, int n_panels) {
    if (lambdas.empty())
        throw std::invalid_argument("simulate: need at least one frequency");
    if (!(noise_fraction >= 0.0) || !std::isfinite(noise_fraction))
        throw std::invalid_argument("simulate: noise fraction must be finite and nonnegative");
    std::vector<double> values(lambdas.size());
    double peak = 0.0;
    for (std::size_t j = 0; j < lambdas.size(); ++j) {
        values[j] = forward_data(p, rho0, lambdas[j], n_panels);
        peak = std::max(peak, std::abs(values[j]));
    }
    double sigma = noise_fraction * peak;
    if (sigma > 0.0) {
        Rng rng(seed);
        for (double& value : values) value += sigma * rng.normal();
    }
    return MeasurementSet(std::vector<double>(lambdas.begin(), lambdas.end()),
                          std::move(values), sigma,
                          sigma > 0.0 ? std::optional<std::uint64_t>(seed) : std::nullopt);
}

}  // namespace specrec
