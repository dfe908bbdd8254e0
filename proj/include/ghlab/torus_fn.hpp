#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "ghlab/errors.hpp"

namespace ghlab {

using cplx = std::complex<double>;

inline constexpr double kTwoPi = 2 * std::numbers::pi;

/// Default number of evaluation points for sup-norms. The grid supremum is a
/// lower bound on the true supremum.
inline constexpr std::size_t kDefaultSupDensity = 4096;

/// One term c * e^{i freq t}.
struct TrigTerm {
    int freq = 0;
    cplx coef{};
};

/// A 2*pi-periodic complex function on the circle.
///
/// Two representations share one interface:
///  - Trig: a finite trigonometric polynomial; derivatives of every order are exact.
///  - Sampled: values on a uniform grid of [0, 2*pi), interpreted through their
///    trigonometric interpolant; derivatives are spectral and limited to max_order().
///
/// Both store the interpolating coefficients, so evaluation, means and primitives
/// are exact for the trigonometric polynomial actually represented.
class PeriodicFunction {
public:
    enum class Representation { Trig, Sampled };

    PeriodicFunction() = default;

    static PeriodicFunction trig(std::vector<TrigTerm> terms);
    static PeriodicFunction constant(cplx value);
    /// coef * e^{i freq t}
    static PeriodicFunction exponential(int freq, cplx coef = 1.0);
    /// Real trigonometric helpers: amp * cos(freq t), amp * sin(freq t).
    static PeriodicFunction cosine(int freq, double amp = 1.0);
    static PeriodicFunction sine(int freq, double amp = 1.0);

    /// Samples at t_k = 2*pi*k/N. Coefficients below chop_rel * max|coef| are dropped,
    /// which keeps high-order spectral derivatives free of round-off noise.
    static PeriodicFunction from_samples(const std::vector<cplx>& samples, int max_order = 16,
                                         double chop_rel = 1e-14);
    static PeriodicFunction sample(const std::function<cplx(double)>& fn, std::size_t n, int max_order = 16,
                                   double chop_rel = 1e-14);

    Representation representation() const noexcept { return rep_; }
    bool exact() const noexcept { return rep_ == Representation::Trig; }
    /// Grid size of a sampled function (0 for trig polynomials).
    std::size_t grid_size() const noexcept { return grid_; }
    /// Highest supported derivative order; -1 means unlimited.
    int max_order() const noexcept { return max_order_; }
    const std::vector<TrigTerm>& terms() const noexcept { return terms_; }
    /// Coefficient at a frequency (0 if absent).
    cplx coefficient(int freq) const;
    int max_abs_frequency() const;
    bool is_zero() const noexcept { return terms_.empty(); }
    bool is_constant() const;

    cplx operator()(double t) const;
    /// Values at t_k = 2*pi*k/n, k = 0..n-1 (exact aliasing-aware evaluation).
    std::vector<cplx> values_on_grid(std::size_t n) const;

    PeriodicFunction real_part() const;
    PeriodicFunction imag_part() const;

    PeriodicFunction operator+(const PeriodicFunction& other) const;
    PeriodicFunction operator-(const PeriodicFunction& other) const;
    PeriodicFunction operator*(cplx s) const;
    friend PeriodicFunction operator*(cplx s, const PeriodicFunction& f) { return f * s; }
    friend PeriodicFunction derivative(const PeriodicFunction& f, int gamma);

private:
    static PeriodicFunction from_terms(std::vector<TrigTerm> terms, Representation rep, std::size_t grid,
                                       int max_order);

    std::vector<TrigTerm> terms_;  // sorted by frequency, distinct, nonzero
    Representation rep_ = Representation::Trig;
    std::size_t grid_ = 0;
    int max_order_ = -1;
};

/// d^gamma/dt^gamma f. Throws UnsupportedOrder when gamma exceeds f.max_order().
PeriodicFunction derivative(const PeriodicFunction& f, int gamma);

double sup_norm(const PeriodicFunction& f, std::size_t density = kDefaultSupDensity);

/// (2*pi)^{-1} * integral over one period: the zero-frequency coefficient.
cplx mean(const PeriodicFunction& f);

/// t -> integral_eta^t f(r) dr. Not periodic when mean(f) != 0.
class Primitive {
public:
    Primitive(const PeriodicFunction& f, double eta);
    cplx operator()(double t) const;
    double base_point() const noexcept { return eta_; }

private:
    std::vector<TrigTerm> integrated_;  // c/(i freq) for freq != 0
    cplx mean_{};
    cplx offset_{};
    double eta_ = 0;
};

Primitive primitive_from(const PeriodicFunction& f, double eta);

struct GevreyNormEstimate {
    double sigma = 1;
    double eta = 1;
    int gamma_max = 0;
    double value = 0;
    int argmax_gamma = 0;
};

/// sup over gamma <= gamma_max of eta^{-gamma} (gamma!)^{-sigma} sup_t |d^gamma f|.
GevreyNormEstimate gevrey_norm(const PeriodicFunction& f, double sigma, double eta, int gamma_max,
                               std::size_t density = kDefaultSupDensity);

/// max over A >= 0 of A^{tau p} exp(-mu A^q), returned as a logarithm; attained at
/// A = (tau p / (mu q))^{1/q}.
double log_max_power_exponential(int tau, double p, double q, double mu);

/// (max_A A^{tau p} e^{-mu A^q})^{1/tau} / (tau!)^{p/(q tau)} for tau >= 1.
double normalized_power_exponential(int tau, double p, double q, double mu);

inline constexpr int kGaussPoints = 16;

/// Composite Gauss-Legendre rule (16 nodes per panel) on [a, b].
/// Exact for polynomials of degree 31 on each panel.
template <class F>
cplx quadrature(F&& g, double a, double b, int panels) {
    if (panels < 1) throw Error(ErrorKind::InvalidArgument, "quadrature needs at least one panel");
    using rule = boost::math::quadrature::gauss<double, kGaussPoints>;
    const auto& x = rule::abscissa();
    const auto& w = rule::weights();
    const double h = (b - a) / panels;
    cplx total = 0;
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * h;
        const double half = 0.5 * h;
        cplx panel = 0;
        auto eval = [&](double t) {
            const cplx v = g(t);
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
                throw NumericError(t, "non-finite integrand at t=" + std::to_string(t));
            }
            return v;
        };
        // boost stores the non-negative half of the symmetric rule
        for (std::size_t k = 0; k < x.size(); ++k) {
            if (x[k] == 0) {
                panel += w[k] * eval(mid);
            } else {
                panel += w[k] * (eval(mid - half * x[k]) + eval(mid + half * x[k]));
            }
        }
        total += panel * half;
    }
    return total;
}

struct QuadratureResult {
    cplx value{};
    int panels = 0;
    double change = 0;  // |I_P - I_{P/2}| at the accepted P
    bool converged = false;
};

/// Doubles panels from `panels` until the change drops below max(tol * |I|, abs_tol).
template <class F>
QuadratureResult adaptive_quadrature(F&& g, double a, double b, double tol, int panels = 1,
                                     int max_panels = 1 << 14, double abs_tol = 1e-15) {
    QuadratureResult r;
    cplx prev = quadrature(g, a, b, panels);
    for (int p = panels * 2; p <= max_panels; p *= 2) {
        const cplx cur = quadrature(g, a, b, p);
        r.value = cur;
        r.panels = p;
        r.change = std::abs(cur - prev);
        if (r.change <= std::max(tol * std::abs(cur), abs_tol)) {
            r.converged = true;
            return r;
        }
        prev = cur;
    }
    return r;
}

/// Smooth cutoff on the circle built from the exp(-1/x) transition: 0 outside
/// [a, b], 1 on [c, d], monotone in between. Requires a < c < d < b and b - a <= 2*pi;
/// the profile is evaluated periodically, so supports may start anywhere on the line.
class BumpProfile {
public:
    BumpProfile(double a, double b, double c, double d);
    double operator()(double t) const;
    double derivative(double t) const;

    double support_begin() const noexcept { return a_; }
    double support_end() const noexcept { return b_; }
    double plateau_begin() const noexcept { return c_; }
    double plateau_end() const noexcept { return d_; }

private:
    double reduce(double t) const;
    double a_, b_, c_, d_;
};

/// Smooth step S(x): 0 for x <= 0, 1 for x >= 1, S(x) = h(x)/(h(x)+h(1-x)), h(x)=e^{-1/x}.
double smooth_step(double x);
double smooth_step_derivative(double x);

/// Sampled smooth cutoff with support [a, b] and plateau [c, d], [a, b] inside [0, 2*pi].
PeriodicFunction bump(std::pair<double, double> support, std::pair<double, double> plateau,
                      std::size_t grid = 4096, int max_order = 16);

}  // namespace ghlab
