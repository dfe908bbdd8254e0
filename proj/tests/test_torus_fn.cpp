#include <doctest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include "ghlab/torus_fn.hpp"
#include "oracles.hpp"

using namespace ghlab;
using std::numbers::pi;

namespace {

double sup_diff(const PeriodicFunction& f, const std::function<cplx(double)>& g, int n = 1000) {
    double m = 0;
    for (int k = 0; k < n; ++k) {
        const double t = kTwoPi * k / n;
        m = std::max(m, std::abs(f(t) - g(t)));
    }
    return m;
}

PeriodicFunction random_trig(oracle::Rng& rng, int max_freq, int terms) {
    std::vector<TrigTerm> v;
    for (int k = 0; k < terms; ++k) v.push_back({rng.integer(-max_freq, max_freq), {rng.uniform(-1, 1), rng.uniform(-1, 1)}});
    return PeriodicFunction::trig(v);
}

}  // namespace

TEST_CASE("derivative of trig polynomials is exact") {
    const auto d2 = derivative(PeriodicFunction::exponential(1), 2);
    CHECK(d2.coefficient(1) == cplx(-1, 0));
    CHECK(derivative(PeriodicFunction::constant(5), 1).is_zero());
}

TEST_CASE("spectral derivative of sampled sin t") {
    const auto f = PeriodicFunction::sample([](double t) { return cplx(std::sin(t)); }, 64);
    const auto d3 = derivative(f, 3);
    CHECK(sup_diff(d3, [](double t) { return cplx(-std::cos(t)); }) < 1e-12);
    CHECK_THROWS_AS(derivative(f, 17), Error);
    try {
        derivative(f, 17);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::UnsupportedOrder);
    }
}

TEST_CASE("mean") {
    const auto c1 = PeriodicFunction::constant(1) + PeriodicFunction::sine(1) * cplx(0, 1);
    CHECK(std::abs(mean(c1) - cplx(1, 0)) < 1e-15);
    const auto c2 = PeriodicFunction::constant({2, 2}) + PeriodicFunction::cosine(1) + PeriodicFunction::sine(1) * cplx(0, 1);
    CHECK(std::abs(mean(c2) - cplx(2, 2)) < 1e-15);

    // e^{sin t}: oracle is I_0(1) from Boost and an independent Gauss-Kronrod run.
    const auto e = PeriodicFunction::sample([](double t) { return cplx(std::exp(std::sin(t))); }, 64);
    const double bessel = boost::math::cyl_bessel_i(0, 1.0);
    const double gk = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                          [](double t) { return std::exp(std::sin(t)); }, 0.0, 2 * pi, 15, 1e-15) /
                      (2 * pi);
    CHECK(bessel == doctest::Approx(gk).epsilon(1e-14));
    CHECK(std::abs(mean(e) - cplx(1.2660658777520083, 0)) < 1e-14);
}

TEST_CASE("primitive_from") {
    const auto p = primitive_from(PeriodicFunction::sine(1), pi);
    for (double t : {0.0, 0.3, 2.0, 5.0, 9.0}) CHECK(std::abs(p(t) - cplx(-1 - std::cos(t))) < 1e-14);
    const auto z = primitive_from(PeriodicFunction::constant(0), 0.4);
    CHECK(std::abs(z(3.0)) == 0.0);
    const auto one = primitive_from(PeriodicFunction::constant(1), 0);
    CHECK(std::abs(one(2 * pi) - cplx(2 * pi)) < 1e-14);
}

TEST_CASE("gevrey_norm") {
    CHECK(gevrey_norm(PeriodicFunction::constant(1), 1.5, 0.7, 10).value == doctest::Approx(1.0));
    const auto e1 = gevrey_norm(PeriodicFunction::exponential(1), 1, 1, 10);
    CHECK(e1.value == doctest::Approx(1.0).epsilon(1e-14));
    const auto e5 = gevrey_norm(PeriodicFunction::exponential(5), 1, 1, 3);
    CHECK(e5.value == doctest::Approx(125.0 / 6.0).epsilon(1e-14));
    CHECK(e5.argmax_gamma == 3);
    // Oracle by direct enumeration: 5^gamma / gamma! peaks at gamma = 4, 5 (value 26.04).
    double best = 0;
    double fact = 1;
    for (int g = 0; g <= 12; ++g) {
        if (g > 0) fact *= g;
        best = std::max(best, std::pow(5.0, g) / fact);
    }
    CHECK(gevrey_norm(PeriodicFunction::exponential(5), 1, 1, 12).value == doctest::Approx(best).epsilon(1e-13));
}

TEST_CASE("quadrature") {
    CHECK(std::abs(quadrature([](double) { return cplx(1); }, 0, 2 * pi, 4) - cplx(2 * pi)) < 1e-14);
    CHECK(std::abs(quadrature([](double t) { return std::exp(cplx(0, t)); }, 0, 2 * pi, 4)) < 1e-12);

    // 2 pi e^{-10} I_0(10) equals the integral of e^{-10(1 - cos t)} over a period.
    const double exact = 2 * pi * std::exp(-10.0) * boost::math::cyl_bessel_i(0, 10.0);
    CHECK(exact == doctest::Approx(0.8032005458329888).epsilon(1e-14));
    const auto g = [](double t) { return cplx(std::exp(-10 * (1 - std::cos(t)))); };
    const auto r = adaptive_quadrature(g, 0, 2 * pi, 1e-14);
    CHECK(r.converged);
    CHECK(std::abs(r.value - exact) < 1e-10);
    CHECK(std::abs(quadrature(g, 0, 2 * pi, 16) - exact) < 1e-10);

    CHECK_THROWS_AS(quadrature([](double) { return cplx(1); }, 0, 1, 0), Error);
    try {
        quadrature([](double t) { return cplx(1.0 / (t - 0.5) / 0.0); }, 0, 1, 1);
        FAIL("expected numeric error");
    } catch (const NumericError& e) {
        CHECK(e.abscissa() >= 0);
        CHECK(e.abscissa() <= 1);
    }
}

TEST_CASE("bump") {
    const auto b = bump({0, 4}, {1, 3});
    CHECK(std::abs(b(2.0) - cplx(1)) < 1e-10);
    CHECK(std::abs(b(5.0)) < 1e-10);
    const double v = b(0.5).real();
    CHECK(v > 0);
    CHECK(v < 1);
    BumpProfile p(0, 4, 1, 3);
    for (double t = 0; t < 1; t += 0.01) CHECK(p(t + 0.01) >= p(t));
    CHECK_THROWS_AS(bump({0, 4}, {3, 1}), Error);
    CHECK_THROWS_AS(bump({1, 8}, {2, 3}), Error);
    try {
        bump({0, 4}, {0, 3});
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidSupport);
    }
}

TEST_CASE("property: derivative composition and linearity on trig polynomials") {
    oracle::Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const auto f = random_trig(rng, 12, 6);
        const auto g = random_trig(rng, 12, 6);
        const auto d11 = derivative(derivative(f, 1), 1);
        const auto d2 = derivative(f, 2);
        REQUIRE(d11.terms().size() == d2.terms().size());
        for (std::size_t k = 0; k < d2.terms().size(); ++k) REQUIRE(d11.terms()[k].coef == d2.terms()[k].coef);
        const cplx a(0.3, -1.2), b(2.0, 0.5);
        const auto lhs = derivative(f * a + g * b, 3);
        const auto rhs = derivative(f, 3) * a + derivative(g, 3) * b;
        for (int fr = -12; fr <= 12; ++fr) REQUIRE(std::abs(lhs.coefficient(fr) - rhs.coefficient(fr)) < 1e-10);
        REQUIRE(mean(derivative(f, 1)) == cplx(0, 0));
    }
}

TEST_CASE("property: primitive vanishes at base point and drifts by 2 pi mean") {
    oracle::Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const auto f = random_trig(rng, 8, 5);
        const double eta = rng.uniform(-5, 5);
        const auto p = primitive_from(f, eta);
        REQUIRE(std::abs(p(eta)) < 1e-13);
        const double t = rng.uniform(-10, 10);
        REQUIRE(std::abs(p(t + 2 * pi) - p(t) - 2 * pi * mean(f)) < 1e-12);
    }
}

TEST_CASE("property: periodicity of sampled and trig values") {
    oracle::Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        const auto f = random_trig(rng, 30, 40);
        REQUIRE(std::abs(f(0) - f(2 * pi)) < 1e-12);
        const auto g = PeriodicFunction::from_samples(f.values_on_grid(128));
        REQUIRE(std::abs(g(0) - g(2 * pi)) < 1e-12);
        REQUIRE(sup_diff(g, [&](double t) { return f(t); }, 200) < 1e-12);
    }
}

TEST_CASE("property: bump finite differences are continuous across the breakpoints") {
    BumpProfile p(0.5, 4.5, 1.5, 3.0);
    const double h = 1e-3;
    for (double x0 : {0.5, 1.5, 3.0, 4.5}) {
        for (int order = 1; order <= 4; ++order) {
            // Forward difference of the given order at x0 - eps and x0 + eps.
            auto fd = [&](double x) {
                double s = 0;
                double binom = 1;
                for (int k = 0; k <= order; ++k) {
                    s += ((order - k) % 2 ? -1 : 1) * binom * p(x + k * h);
                    binom = binom * (order - k) / (k + 1);
                }
                return s / std::pow(h, order);
            };
            const double left = fd(x0 - 2 * h * order);
            const double right = fd(x0 + 1e-9);
            CHECK(std::abs(left - right) < 0.05 * std::max(1.0, std::abs(left)) + 1e-6);
        }
    }
}

TEST_CASE("property: maximum of A^{tau p} e^{-mu A^q}") {
    for (double p : {0.5, 1.0, 2.0}) {
        for (double q : {0.5, 1.0, 2.0}) {
            for (double mu : {0.5, 1.0, 2.0}) {
                double prev = 0;
                double hi = 0;
                for (int tau = 1; tau <= 30; ++tau) {
                    const double v = normalized_power_exponential(tau, p, q, mu);
                    // Brute-force maximum over a fine A-grid agrees with the closed form.
                    if (tau <= 5) {
                        const double A0 = std::pow(tau * p / (mu * q), 1 / q);
                        double best = -1e300;
                        for (int k = 1; k <= 4000; ++k) {
                            const double A = A0 * k / 2000.0;
                            best = std::max(best, tau * p * std::log(A) - mu * std::pow(A, q));
                        }
                        CHECK(best <= log_max_power_exponential(tau, p, q, mu) + 1e-12);
                        CHECK(best >= log_max_power_exponential(tau, p, q, mu) - 1e-5);
                    }
                    hi = std::max(hi, v);
                    prev = v;
                }
                CHECK(std::isfinite(hi));
                CHECK(prev <= hi);
            }
        }
    }
}
