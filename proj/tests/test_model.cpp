#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "specrec/model.hpp"

using namespace specrec;

namespace {

// The five-segment exponent used throughout: slope 5/3 ramps joined by exact
// plateaus at 1/3 on (0.2,0.4] and 2/3 on (0.6,0.8].
AttenuationExponent ramp_plateau_exponent() {
    Interval domain(0.0, 1.0);
    const double s = 5.0 / 3.0;
    std::vector<AttenuationExponent::Segment> segs;
    segs.push_back({0.0, 0.2, [s](double x) { return s * x; }, std::nullopt});
    segs.push_back({0.2, 0.4, nullptr, 1.0 / 3.0});
    segs.push_back({0.4, 0.6, [s](double x) { return s * x - 1.0 / 3.0; }, std::nullopt});
    segs.push_back({0.6, 0.8, nullptr, 2.0 / 3.0});
    segs.push_back({0.8, 1.0, [s](double x) { return s * x - 2.0 / 3.0; }, std::nullopt});
    return AttenuationExponent::segments(domain, std::move(segs));
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("interval validates its endpoints") {
    Interval iv(-1.0, 2.0);
    CHECK(iv.a() == -1.0);
    CHECK(iv.b() == 2.0);
    CHECK(iv.length() == 3.0);
    CHECK(iv.contains(0.0));
    CHECK(iv.contains(-1.0));
    CHECK(iv.contains(2.0));
    CHECK(!iv.contains(2.0000001));
    CHECK_THROWS_AS(Interval(1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(Interval(1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(Interval(0.0, std::numeric_limits<double>::infinity()),
                    std::invalid_argument);
}

TEST_CASE("hat basis spans the interval with uniform nodes") {
    HatBasis basis(Interval(0.0, 1.0), 5);
    CHECK(basis.size() == 5);
    CHECK(basis.spacing() == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(basis.node(0) == 0.0);
    CHECK(basis.node(4) == 1.0);
    CHECK(basis.node(2) == doctest::Approx(0.5).epsilon(1e-15));

    SUBCASE("boundary hats are clipped half hats") {
        auto [lo0, hi0] = basis.support(0);
        CHECK(lo0 == 0.0);
        CHECK(hi0 == doctest::Approx(0.25).epsilon(1e-15));
        auto [lo4, hi4] = basis.support(4);
        CHECK(lo4 == doctest::Approx(0.75).epsilon(1e-15));
        CHECK(hi4 == 1.0);
        CHECK(eval_hat(basis, 0, 0.0) == 1.0);
        CHECK(eval_hat(basis, 4, 1.0) == 1.0);
    }

    SUBCASE("hats are an exact partition of unity") {
        for (double x : {0.0, 0.1, 0.25, 0.33, 0.5, 0.77, 0.999, 1.0}) {
            double sum = 0.0;
            for (int k = 0; k < basis.size(); ++k) sum += eval_hat(basis, k, x);
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
        }
    }

    SUBCASE("bad arguments are rejected") {
        CHECK_THROWS_AS(HatBasis(Interval(0.0, 1.0), 1), std::invalid_argument);
        CHECK_THROWS_AS(eval_hat(basis, -1, 0.5), std::invalid_argument);
        CHECK_THROWS_AS(eval_hat(basis, 0, 1.5), std::invalid_argument);
    }
}

TEST_CASE("density fields interpolate node values piecewise linearly") {
    HatBasis basis(Interval(0.0, 1.0), 11);
    DensityField field = interpolate(basis, [](double x) { return 2.0 * x - 0.5; });

    // A linear function is reproduced exactly, including between nodes.
    for (double x : {0.0, 0.05, 0.123, 0.5, 0.87, 1.0})
        CHECK(eval_density(field, x) == doctest::Approx(2.0 * x - 0.5).epsilon(1e-14));

    SUBCASE("evaluation matches the hat expansion") {
        DensityField wavy = interpolate(basis, [](double x) { return std::sin(5.0 * x); });
        for (double x : {0.21, 0.68}) {
            double expansion = 0.0;
            for (int k = 0; k < basis.size(); ++k)
                expansion += wavy.coeffs()[k] * eval_hat(basis, k, x);
            CHECK(eval_density(wavy, x) == doctest::Approx(expansion).epsilon(1e-14));
        }
    }

    SUBCASE("coefficients must fit the basis and be finite") {
        Eigen::VectorXd short_coeffs(3);
        short_coeffs << 1.0, 2.0, 3.0;
        CHECK_THROWS_AS(DensityField(basis, short_coeffs), std::invalid_argument);
        Eigen::VectorXd bad = Eigen::VectorXd::Zero(11);
        bad[4] = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(DensityField(basis, bad), std::invalid_argument);
        CHECK_THROWS_AS(eval_density(field, -0.1), std::invalid_argument);
    }
}

TEST_CASE("source pieces own their right endpoint") {
    Interval domain(0.0, 1.0);
    SourceFunction step = SourceFunction::piecewise(
        domain, {{0.0, 0.5, [](double) { return 1.0; }},
                 {0.5, 1.0, [](double) { return 2.0; }}});
    CHECK(step(0.25) == 1.0);
    CHECK(step(0.5) == 1.0);   // boundary belongs to the piece on its left
    CHECK(step(0.75) == 2.0);
    CHECK(step(0.0) == 1.0);   // first piece also owns the left endpoint
    CHECK(step(1.0) == 2.0);
    CHECK_THROWS_AS(step(1.5), std::invalid_argument);

    SUBCASE("breakpoints report the piece bounds") {
        std::vector<double> bp = step.breakpoints();
        REQUIRE(bp.size() == 3);
        CHECK(bp[0] == 0.0);
        CHECK(bp[1] == 0.5);
        CHECK(bp[2] == 1.0);
    }

    SUBCASE("piece_formula returns the one-sided formula") {
        CHECK(step.piece_formula(0.2)(0.5) == 1.0);
        CHECK(step.piece_formula(0.8)(0.5) == 2.0);  // right formula, evaluated anywhere
    }

    SUBCASE("malformed piece lists are rejected") {
        CHECK_THROWS_AS(SourceFunction::piecewise(domain, {}), std::invalid_argument);
        CHECK_THROWS_AS(SourceFunction::piecewise(
                            domain, {{0.0, 0.4, [](double) { return 1.0; }},
                                     {0.6, 1.0, [](double) { return 1.0; }}}),
                        std::invalid_argument);
        CHECK_THROWS_AS(SourceFunction::piecewise(
                            domain, {{0.0, 0.0, [](double) { return 1.0; }},
                                     {0.0, 1.0, [](double) { return 1.0; }}}),
                        std::invalid_argument);
        CHECK_THROWS_AS(SourceFunction::piecewise(domain, {{0.0, 1.0, nullptr}}),
                        std::invalid_argument);
    }
}

TEST_CASE("indicator sources are half-open boxes") {
    SourceFunction box = SourceFunction::indicator(Interval(0.0, 1.0), 0.3, 0.6, 0.3);
    CHECK(box(0.2) == 0.0);
    CHECK(box(0.3) == 0.0);   // left edge excluded
    CHECK(box(0.45) == 0.3);
    CHECK(box(0.6) == 0.3);   // right edge included
    CHECK(box(0.8) == 0.0);
    CHECK(box.pieces().size() == 3);
    CHECK_THROWS_AS(SourceFunction::indicator(Interval(0.0, 1.0), 0.6, 0.3, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(SourceFunction::indicator(Interval(0.0, 1.0), -0.1, 0.6, 1.0),
                    std::invalid_argument);
}

TEST_CASE("source arithmetic composes pieces and kinks") {
    Interval domain(0.0, 1.0);
    SourceFunction box = SourceFunction::indicator(domain, 0.3, 0.6, 2.0);
    SourceFunction ramp(domain, [](double x) { return x; });

    SourceFunction sum = box + ramp;
    CHECK(sum(0.1) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(sum(0.5) == doctest::Approx(2.5).epsilon(1e-15));
    std::vector<double> bp = sum.breakpoints();
    REQUIRE(bp.size() == 4);
    CHECK(bp[1] == 0.3);
    CHECK(bp[2] == 0.6);

    SourceFunction scaled = 3.0 * box;
    CHECK(scaled(0.5) == 6.0);
    CHECK(scaled(0.1) == 0.0);
    CHECK_THROWS_AS(std::numeric_limits<double>::quiet_NaN() * box, std::invalid_argument);

    SUBCASE("mismatched domains cannot be added") {
        SourceFunction other(Interval(0.0, 2.0), [](double x) { return x; });
        CHECK_THROWS_AS(box + other, std::invalid_argument);
    }

    SUBCASE("kinks join the breakpoint list") {
        SourceFunction bent(domain, [](double x) { return std::abs(x - 0.4); });
        std::vector<double> kink{0.4};
        bent.add_kinks(kink);
        std::vector<double> bent_bp = bent.breakpoints();
        REQUIRE(bent_bp.size() == 3);
        CHECK(bent_bp[1] == 0.4);
        std::vector<double> bad{std::numeric_limits<double>::infinity()};
        CHECK_THROWS_AS(bent.add_kinks(bad), std::invalid_argument);
    }

    SUBCASE("from_density mirrors the field and kinks interior nodes") {
        HatBasis basis(domain, 5);
        DensityField field = interpolate(basis, [](double x) { return x * x; });
        SourceFunction wrapped = SourceFunction::from_density(field);
        for (double x : {0.0, 0.2, 0.61, 1.0})
            CHECK(wrapped(x) == doctest::Approx(eval_density(field, x)).epsilon(1e-15));
        CHECK(wrapped.breakpoints().size() == 5);
    }
}

TEST_CASE("attenuation exponents evaluate per segment or by samples") {
    SUBCASE("closed-form segments with plateaus") {
        AttenuationExponent p = ramp_plateau_exponent();
        CHECK(p.is_closed_form());
        CHECK(p(0.12) == doctest::Approx(0.2).epsilon(1e-15));
        CHECK(p(0.3) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
        CHECK(p(0.5) == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(p(0.7) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
        CHECK(p(0.9) == doctest::Approx(5.0 / 6.0).epsilon(1e-14));
        CHECK(p.breakpoints().size() == 6);
        CHECK(p.value_range() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(p.local_formula(0.3)(0.123) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
        CHECK_THROWS_AS(p(1.2), std::invalid_argument);
    }

    SUBCASE("sampled values interpolate linearly") {
        AttenuationExponent p =
            AttenuationExponent::samples(Interval(0.0, 1.0), {0.0, 1.0, 0.0});
        CHECK(!p.is_closed_form());
        CHECK(p(0.25) == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(p(0.5) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(p(0.875) == doctest::Approx(0.25).epsilon(1e-15));
        CHECK(p.breakpoints().size() == 3);
        CHECK(p.value_range() == doctest::Approx(1.0).epsilon(1e-15));
    }

    SUBCASE("constructors validate their input") {
        Interval domain(0.0, 1.0);
        CHECK_THROWS_AS(AttenuationExponent::segments(domain, {}), std::invalid_argument);
        CHECK_THROWS_AS(AttenuationExponent::segments(
                            domain, {{0.0, 0.5, nullptr, std::nullopt}}),
                        std::invalid_argument);  // does not span, and no formula
        CHECK_THROWS_AS(AttenuationExponent::segments(
                            domain, {{0.0, 1.0, nullptr, std::nullopt}}),
                        std::invalid_argument);  // neither formula nor plateau
        CHECK_THROWS_AS(AttenuationExponent::samples(domain, {0.5}), std::invalid_argument);
        CHECK_THROWS_AS(AttenuationExponent::samples(
                            domain, {0.0, std::numeric_limits<double>::quiet_NaN()}),
                        std::invalid_argument);
        CHECK_THROWS_AS(AttenuationExponent::closed_form(domain, nullptr),
                        std::invalid_argument);
    }
}

TEST_CASE("attenuation_to_p accumulates the attenuation density") {
    // beta = 2x integrates to p(x) = x^2; Simpson is exact per cell, so the
    // sample nodes carry no quadrature error (between nodes the samples are
    // chord-interpolated and x = 0.5 is a node of the 201-point grid).
    AttenuationExponent p =
        attenuation_to_p([](double x) { return 2.0 * x; }, Interval(0.0, 1.0), 201);
    CHECK(p(0.0) == 0.0);
    CHECK(p(0.5) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(p(1.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(!p.is_closed_form());
    CHECK_THROWS_AS(attenuation_to_p(nullptr, Interval(0.0, 1.0), 100),
                    std::invalid_argument);
    CHECK_THROWS_AS(attenuation_to_p([](double) { return 1.0; }, Interval(0.0, 1.0), 1),
                    std::invalid_argument);
}

TEST_CASE("forward data reproduces frozen reference values") {
    Interval domain(0.0, 1.0);

    SUBCASE("identity exponent, unit source: (lambda-1)/ln lambda") {
        AttenuationExponent p = AttenuationExponent::closed_form(domain, [](double x) { return x; });
        SourceFunction one = SourceFunction::constant(domain, 1.0);
        CHECK(forward_data(p, one, 0.5, 512) ==
              doctest::Approx(0.72134752044448170368).epsilon(1e-13));
    }

    SUBCASE("square exponent, unit source") {
        AttenuationExponent p =
            AttenuationExponent::closed_form(domain, [](double x) { return x * x; });
        SourceFunction one = SourceFunction::constant(domain, 1.0);
        CHECK(forward_data(p, one, 0.5, 1024) ==
              doctest::Approx(0.81002545439095582663).epsilon(1e-12));
    }

    SUBCASE("identity exponent, box source") {
        AttenuationExponent p = AttenuationExponent::closed_form(domain, [](double x) { return x; });
        SourceFunction box = SourceFunction::indicator(domain, 0.3, 0.6, 0.3);
        CHECK(forward_data(p, box, 0.5) ==
              doctest::Approx(0.066002623359123611406).epsilon(1e-13));
    }

    SUBCASE("ramp-plateau exponent, sine source") {
        AttenuationExponent p = ramp_plateau_exponent();
        SourceFunction rho(domain, [](double x) { return std::sin(std::numbers::pi * x); });
        CHECK(forward_data(p, rho, 0.5) ==
              doctest::Approx(0.45371400673248948777).epsilon(1e-12));
        CHECK(forward_data(p, rho, 0.25) ==
              doctest::Approx(0.32844979505814056321).epsilon(1e-12));
    }

    SUBCASE("lambda = 1 short-circuits to the plain integral") {
        AttenuationExponent p = ramp_plateau_exponent();
        SourceFunction rho(domain, [](double x) { return std::sin(std::numbers::pi * x); });
        CHECK(forward_data(p, rho, 1.0, 2048) ==
              doctest::Approx(2.0 / std::numbers::pi).epsilon(1e-12));
    }

    SUBCASE("frequencies outside (0,1] are rejected") {
        AttenuationExponent p = AttenuationExponent::closed_form(domain, [](double x) { return x; });
        SourceFunction one = SourceFunction::constant(domain, 1.0);
        CHECK_THROWS_AS(forward_data(p, one, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(forward_data(p, one, -0.5), std::invalid_argument);
        CHECK_THROWS_AS(forward_data(p, one, 1.5), std::invalid_argument);
        SourceFunction wrong(Interval(0.0, 2.0), [](double) { return 1.0; });
        CHECK_THROWS_AS(forward_data(p, wrong, 0.5), std::invalid_argument);
    }
}

TEST_CASE("measurement sets enforce their invariants") {
    std::vector<double> lambdas{0.25, 0.5, 0.75};
    std::vector<double> values{1.0, 2.0, 3.0};

    MeasurementSet clean(lambdas, values, 0.0, std::nullopt);
    CHECK(clean.size() == 3);
    CHECK(clean.sigma() == 0.0);
    CHECK(!clean.seed());

    MeasurementSet noisy(lambdas, values, 0.1, 7u);
    CHECK(noisy.seed().has_value());
    CHECK(*noisy.seed() == 7u);

    CHECK_THROWS_AS(MeasurementSet({0.5, 0.25}, {1.0, 2.0}, 0.0, std::nullopt),
                    std::invalid_argument);
    CHECK_THROWS_AS(MeasurementSet({0.5, 1.0}, {1.0, 2.0}, 0.0, std::nullopt),
                    std::invalid_argument);
    CHECK_THROWS_AS(MeasurementSet({0.5}, {1.0, 2.0}, 0.0, std::nullopt),
                    std::invalid_argument);
    CHECK_THROWS_AS(MeasurementSet({0.5}, {1.0}, -0.1, std::nullopt), std::invalid_argument);
    CHECK_THROWS_AS(MeasurementSet({0.5}, {1.0}, 0.1, std::nullopt), std::invalid_argument);
    CHECK_THROWS_AS(MeasurementSet({0.5}, {1.0}, 0.0, 7u), std::invalid_argument);
}

TEST_CASE("simulation adds seeded gaussian noise scaled to the data peak") {
    Interval domain(0.0, 1.0);
    AttenuationExponent p = AttenuationExponent::closed_form(domain, [](double x) { return x; });
    SourceFunction rho(domain, [](double x) { return std::sin(std::numbers::pi * x); });
    std::vector<double> lambdas;
    for (int j = 1; j <= 20; ++j) lambdas.push_back(j / 21.0);

    MeasurementSet noisy = simulate_measurements(p, rho, lambdas, 0.005, 99);
    MeasurementSet again = simulate_measurements(p, rho, lambdas, 0.005, 99);
    MeasurementSet other = simulate_measurements(p, rho, lambdas, 0.005, 100);
    MeasurementSet clean = simulate_measurements(p, rho, lambdas, 0.0, 99);

    double peak = 0.0;
    for (double v : clean.values()) peak = std::max(peak, std::abs(v));
    CHECK(noisy.sigma() == doctest::Approx(0.005 * peak).epsilon(1e-15));
    CHECK(clean.sigma() == 0.0);
    CHECK(!clean.seed());
    REQUIRE(noisy.seed().has_value());
    CHECK(*noisy.seed() == 99u);

    bool identical = true, different = false;
    for (std::size_t j = 0; j < lambdas.size(); ++j) {
        identical = identical && noisy.values()[j] == again.values()[j];
        different = different || noisy.values()[j] != other.values()[j];
        CHECK(std::abs(noisy.values()[j] - clean.values()[j]) < 6.0 * noisy.sigma());
    }
    CHECK(identical);
    CHECK(different);

    CHECK_THROWS_AS(simulate_measurements(p, rho, {}, 0.005, 1), std::invalid_argument);
    CHECK_THROWS_AS(simulate_measurements(p, rho, lambdas, -0.01, 1), std::invalid_argument);
}

TEST_CASE("raw spectra reduce to frequency-sorted data") {
    // alpha(w) = w gives lambda = exp(-w); eta is its exact inverse. epsilon
    // doubles every intensity, so D must be half the raw value.
    SpectralModel model{[](double w) { return w; }, [](double) { return 2.0; }};
    auto eta = [](double lam) { return -std::log(lam); };
    std::vector<std::pair<double, double>> raw{{2.0, 4.0}, {0.5, 1.0}, {1.0, 3.0}};

    MeasurementSet reduced = preprocess_measurement(model, eta, raw);
    REQUIRE(reduced.size() == 3);
    // Sorted by lambda = exp(-w): w = 2.0, 1.0, 0.5.
    CHECK(reduced.lambdas()[0] == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
    CHECK(reduced.lambdas()[1] == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(reduced.lambdas()[2] == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
    CHECK(reduced.values()[0] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(reduced.values()[1] == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(reduced.values()[2] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(reduced.sigma() == 0.0);

    SUBCASE("a wrong inverse is detected") {
        auto bad_eta = [](double lam) { return -std::log(lam) + 0.1; };
        CHECK_THROWS_AS(preprocess_measurement(model, bad_eta, raw), std::runtime_error);
    }

    SUBCASE("nonpositive emission density is detected") {
        SpectralModel dark{[](double w) { return w; }, [](double) { return 0.0; }};
        CHECK_THROWS_AS(preprocess_measurement(dark, eta, raw), std::runtime_error);
    }

    SUBCASE("frequencies must map into (0,1)") {
        SpectralModel off{[](double) { return -1.0; }, [](double) { return 1.0; }};
        CHECK_THROWS_AS(preprocess_measurement(off, eta, raw), std::runtime_error);
    }

    SUBCASE("missing pieces are rejected up front") {
        CHECK_THROWS_AS(preprocess_measurement(SpectralModel{}, eta, raw),
                        std::invalid_argument);
        CHECK_THROWS_AS(preprocess_measurement(model, nullptr, raw), std::invalid_argument);
        CHECK_THROWS_AS(preprocess_measurement(model, eta, {}), std::invalid_argument);
    }
}

}  // TEST_SUITE
