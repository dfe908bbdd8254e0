#include "ghlab/mode_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss.hpp>

#include "parallel.hpp"

namespace ghlab {

namespace {

constexpr double kLogMaxDouble = 709.0;
const cplx kI{0, 1};

/// m * e^{s}; keeps integrals whose exponents exceed double range representable.
struct Scaled {
    cplx m{};
    double s = 0;

    double log_abs() const { return std::abs(m) == 0 ? -std::numeric_limits<double>::infinity() : std::log(std::abs(m)) + s; }
};

Scaled operator*(const Scaled& x, const Scaled& y) { return {x.m * y.m, x.s + y.s}; }

/// Rescales both to the larger exponent and returns the pair of mantissas.
std::pair<cplx, cplx> common_scale(const Scaled& x, const Scaled& y) {
    const double s = std::max(x.s, y.s);
    return {x.m * std::exp(x.s - s), y.m * std::exp(y.s - s)};
}

cplx to_complex(const Scaled& x, double abscissa) {
    const double la = x.log_abs();
    if (la > kLogMaxDouble) {
        throw OverflowError(la, "solution magnitude e^" + std::to_string(la) + " overflows at t=" +
                                    std::to_string(abscissa));
    }
    return x.m * std::exp(x.s);
}

/// 1 / (1 - e^z) with the exponent split off when Re z > 0.
Scaled inv_one_minus_exp(cplx z) {
    if (z.real() <= 0) return {1.0 / stable_one_minus_exp(z), 0};
    // 1/(1 - e^z) = -e^{-z} / (1 - e^{-z})
    const cplx phase = std::exp(cplx(0, -z.imag()));
    return {-phase / stable_one_minus_exp(-z), -z.real()};
}

struct IntegralFormula {
    double lambda;
    bool backward;  // Solu-1: kernel over [t - 2 pi, t]; Solu-2: over [t, t + 2 pi]
    Primitive C;
    const PeriodicFunction* f;
    Scaled prefactor;

    /// Integral part at one t with `panels` Gauss panels on zeta in [0, 2 pi].
    Scaled integral(double t, int panels, std::vector<cplx>& ex, std::vector<cplx>& val) const {
        using rule = boost::math::quadrature::gauss<double, kGaussPoints>;
        const auto& x = rule::abscissa();
        const auto& w = rule::weights();
        const double h = kTwoPi / panels;
        const cplx Ct = C(t);
        ex.clear();
        val.clear();
        auto add = [&](double zeta, double weight) {
            cplx e;
            cplx fv;
            if (backward) {
                e = -kI * lambda * (Ct - C(t - zeta));
                fv = (*f)(t - zeta);
            } else {
                e = kI * lambda * (C(t + zeta) - Ct);
                fv = (*f)(t + zeta);
            }
            ex.push_back(e);
            val.push_back(weight * 0.5 * h * fv);
        };
        for (int p = 0; p < panels; ++p) {
            const double mid = (p + 0.5) * h;
            for (std::size_t k = 0; k < x.size(); ++k) {
                if (x[k] == 0) {
                    add(mid, w[k]);
                } else {
                    add(mid - 0.5 * h * x[k], w[k]);
                    add(mid + 0.5 * h * x[k], w[k]);
                }
            }
        }
        double top = -std::numeric_limits<double>::infinity();
        for (const auto& e : ex) top = std::max(top, e.real());
        cplx sum = 0;
        for (std::size_t k = 0; k < ex.size(); ++k) sum += val[k] * std::exp(ex[k] - top);
        return Scaled{sum, top} * prefactor;
    }
};

bool close_enough(const Scaled& a, const Scaled& b, double tol) {
    const auto [x, y] = common_scale(a, b);
    return std::abs(x - y) <= tol * std::max(std::abs(y), std::numeric_limits<double>::min());
}

double tail_ratio(const PeriodicFunction& u, std::size_t n) {
    double peak = 0, tail = 0;
    const int cut = static_cast<int>(n / 4);
    for (const auto& term : u.terms()) {
        peak = std::max(peak, std::abs(term.coef));
        if (std::abs(term.freq) > cut) tail = std::max(tail, std::abs(term.coef));
    }
    return peak == 0 ? 0 : tail / peak;
}

ModeSolution zero_solution(FormulaUsed used, double divisor) {
    ModeSolution s;
    s.u = PeriodicFunction::constant(0);
    s.formula_used = used;
    s.divisor_magnitude = divisor;
    return s;
}

}  // namespace

const char* to_string(Formula f) {
    switch (f) {
        case Formula::Auto: return "auto";
        case Formula::Solu1: return "solu1";
        case Formula::Solu2: return "solu2";
        case Formula::Divisor: return "divisor";
    }
    return "?";
}

const char* to_string(FormulaUsed f) {
    switch (f) {
        case FormulaUsed::DivisorForm: return "divisor-form";
        case FormulaUsed::Solu1: return "Solu-1";
        case FormulaUsed::Solu2: return "Solu-2";
        case FormulaUsed::GeneralWithFreeConstant: return "general-with-free-constant";
    }
    return "?";
}

Formula formula_from_string(const std::string& s) {
    if (s == "auto") return Formula::Auto;
    if (s == "solu1") return Formula::Solu1;
    if (s == "solu2") return Formula::Solu2;
    if (s == "divisor") return Formula::Divisor;
    throw Error(ErrorKind::Usage, "unknown formula '" + s + "' (expected auto|solu1|solu2|divisor)");
}

cplx stable_one_minus_exp(cplx z) {
    const double x = z.real();
    const double y = z.imag();
    // 1 - e^{x+iy} = -(expm1(x) cos y - 2 sin^2(y/2)) - i e^x sin y
    const double s = std::sin(0.5 * y);
    const double re = -(std::expm1(x) * std::cos(y) - 2 * s * s);
    const double im = -std::exp(x) * std::sin(y);
    return {re, im};
}

std::vector<std::size_t> resonant_set(const EigenvalueSequence& seq, cplx c0, double tol) {
    if (tol < 0) throw Error(ErrorKind::InvalidArgument, "resonance tolerance must be nonnegative");
    std::vector<std::size_t> out;
    const auto v = seq.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        const cplx w = v[i] * c0;
        if (std::abs(w.imag()) <= tol && std::abs(w.real() - std::round(w.real())) <= tol) out.push_back(i + 1);
    }
    return out;
}

ModeSolution solve_constant_mode(double lambda, cplx omega, const PeriodicFunction& f, const SolverOptions& opts,
                                 std::size_t j) {
    const cplx w = omega * lambda;
    const long long tau0 = -std::llround(w.real());
    const double smallest = std::abs(static_cast<double>(tau0) + w);
    const bool resonant = smallest <= opts.resonance_tol;
    if (resonant && f.coefficient(static_cast<int>(tau0)) != cplx(0, 0)) {
        throw ResonanceError(j, tau0, "resonant mode j=" + std::to_string(j) + " at frequency " +
                                          std::to_string(tau0) + " with nonzero data");
    }

    std::vector<TrigTerm> out;
    out.reserve(f.terms().size());
    double residual = 0;
    for (const auto& term : f.terms()) {
        const cplx d = static_cast<double>(term.freq) + w;
        if (resonant && term.freq == tau0) continue;
        const cplx coef = term.coef / d;
        out.push_back({term.freq, coef});
        residual += std::abs(d * coef - term.coef);
    }

    ModeSolution s;
    s.u = f.exact() ? PeriodicFunction::trig(std::move(out))
                    : PeriodicFunction::from_samples(
                          PeriodicFunction::trig(std::move(out)).values_on_grid(f.grid_size()), f.max_order(), 0);
    s.resonant = resonant;
    s.divisor_magnitude = resonant ? 0 : smallest;
    s.formula_used = resonant ? FormulaUsed::GeneralWithFreeConstant : FormulaUsed::DivisorForm;
    s.residual_sup = residual;
    return s;
}

double mode_residual(double lambda, const PeriodicFunction& c, const PeriodicFunction& u, const PeriodicFunction& f,
                     std::size_t density) {
    const std::size_t n = std::max({density, 2 * u.grid_size(), 2 * f.grid_size(), 2 * c.grid_size()});
    const auto du = derivative(u, 1).values_on_grid(n);
    const auto uv = u.values_on_grid(n);
    const auto cv = c.values_on_grid(n);
    const auto fv = f.values_on_grid(n);
    double r = 0;
    for (std::size_t k = 0; k < n; ++k) r = std::max(r, std::abs(-kI * du[k] + lambda * cv[k] * uv[k] - fv[k]));
    return r;
}

ModeSolution solve_variable_mode(double lambda, const PeriodicFunction& c, const PeriodicFunction& f,
                                 const SolverOptions& opts, std::size_t j) {
    if (opts.formula == Formula::Divisor) {
        if (!c.is_constant()) {
            throw Error(ErrorKind::InvalidArgument, "divisor form needs a constant coefficient");
        }
        return solve_constant_mode(lambda, mean(c), f, opts, j);
    }
    if (lambda == 0) return solve_constant_mode(0, 0, f, opts, j);

    const cplx c0 = mean(c);
    const cplx w = lambda * c0;
    const double k = std::round(w.real());
    if (std::abs(w.imag()) <= opts.resonance_tol && std::abs(w.real() - k) <= opts.resonance_tol) {
        // Constant coefficient: the divisor form handles compatible resonant data.
        if (c.is_constant()) return solve_constant_mode(lambda, c0, f, opts, j);
        const auto tau = -static_cast<long long>(k);
        throw ResonanceError(j, tau, "resonant mode j=" + std::to_string(j) + ": lambda*c0 = " +
                                         std::to_string(w.real()) + " is an integer");
    }

    const bool solu1 = opts.formula == Formula::Solu1 || (opts.formula == Formula::Auto && c0.imag() <= 0);
    // Solu-1: i/(1 - e^{-2 pi i lambda c0});  Solu-2: i/(e^{2 pi i lambda c0} - 1)
    const cplx z = solu1 ? -kI * kTwoPi * w : kI * kTwoPi * w;
    Scaled pre = inv_one_minus_exp(z);
    pre.m *= solu1 ? kI : -kI;
    const double divisor = std::abs(stable_one_minus_exp(z));
    const FormulaUsed used = solu1 ? FormulaUsed::Solu1 : FormulaUsed::Solu2;

    if (f.is_zero()) return zero_solution(used, divisor);

    IntegralFormula formula{lambda, solu1, Primitive(c, 0), &f, pre};
    std::vector<cplx> ex, val;

    // Panel count: double on probe abscissae until every probe is stable.
    constexpr int kProbes = 8;
    int panels = std::max(1, opts.panels);
    double change = 0;
    for (;;) {
        bool ok = true;
        change = 0;
        for (int p = 0; p < kProbes; ++p) {
            const double t = kTwoPi * (p + 0.37) / kProbes;
            const Scaled a = formula.integral(t, panels, ex, val);
            const Scaled b = formula.integral(t, 2 * panels, ex, val);
            const auto [x, y] = common_scale(a, b);
            change = std::max(change, std::abs(x - y) / std::max(std::abs(y), std::numeric_limits<double>::min()));
            if (!close_enough(a, b, opts.quad_tol)) ok = false;
        }
        panels *= 2;
        if (ok || panels >= opts.max_panels) break;
    }

    std::size_t n = std::max<std::size_t>(8, opts.grid);
    PeriodicFunction u;
    for (;;) {
        std::vector<cplx> values(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double t = kTwoPi * static_cast<double>(i) / static_cast<double>(n);
            values[i] = to_complex(formula.integral(t, panels, ex, val), t);
        }
        u = PeriodicFunction::from_samples(values, opts.max_order);
        if (tail_ratio(u, n) <= 1e-13 || 2 * n > opts.max_grid) break;
        n *= 2;
    }

    ModeSolution s;
    s.u = std::move(u);
    s.formula_used = used;
    s.divisor_magnitude = divisor;
    s.panels_used = panels;
    s.quadrature_change = change;
    s.residual_sup = mode_residual(lambda, c, s.u, f);

    const double scale = std::max({1.0, sup_norm(f), lambda * sup_norm(c) * sup_norm(s.u)});
    if (!(s.residual_sup <= opts.residual_tol * scale)) {
        throw NumericError(0, "mode j=" + std::to_string(j) + " residual " + std::to_string(s.residual_sup) +
                                  " exceeds tolerance " + std::to_string(opts.residual_tol * scale));
    }
    return s;
}

FieldSolution solve_field(const OperatorSpec& op, const CoefficientField& f, const SolverOptions& opts,
                          unsigned threads) {
    f.validate();
    const auto& spectrum = op.spectrum() ? *op.spectrum() : *f.spectrum;
    if (f.size() > spectrum.size()) {
        throw Error(ErrorKind::InvalidArgument, "data field is longer than the operator spectrum");
    }
    const std::size_t J = f.size();
    std::vector<ModeSolution> out(J);
    std::vector<std::string> errors(J);
    std::vector<int> error_kind(J, -1);

    auto solve_one = [&](std::size_t i) {
        const std::size_t j = i + 1;
        const double lambda = spectrum.lambda(j);
        try {
            const bool integral = opts.formula == Formula::Solu1 || opts.formula == Formula::Solu2;
            if (op.is_constant() && !integral) {
                out[i] = solve_constant_mode(lambda, op.constant().omega, f.mode(j), opts, j);
            } else {
                out[i] = solve_variable_mode(lambda, op.coefficient_function(), f.mode(j), opts, j);
            }
        } catch (const Error& e) {
            errors[i] = e.what();
            error_kind[i] = static_cast<int>(e.kind());
        }
    };

    detail::parallel_for(J, threads, solve_one);

    std::vector<std::size_t> failing;
    std::string message;
    ErrorKind kind = ErrorKind::Numeric;
    for (std::size_t i = 0; i < J; ++i) {
        if (error_kind[i] < 0) continue;
        if (failing.empty()) {
            kind = static_cast<ErrorKind>(error_kind[i]);
            message = errors[i];
        }
        failing.push_back(i + 1);
    }
    if (!failing.empty()) {
        throw FieldError(kind, failing,
                         std::to_string(failing.size()) + " mode(s) failed; first: " + message);
    }

    FieldSolution sol;
    sol.u.spectrum = f.spectrum;
    sol.u.modes.reserve(J);
    for (auto& m : out) sol.u.modes.push_back(m.u);
    sol.modes = std::move(out);
    return sol;
}

}  // namespace ghlab
