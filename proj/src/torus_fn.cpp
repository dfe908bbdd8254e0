#include "ghlab/torus_fn.hpp"

#include <algorithm>
#include <mutex>

#include <fftw3.h>

namespace ghlab {

namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

enum class Direction { Forward, Backward };

/// Unnormalized DFT; Forward uses e^{-2 pi i k n / N}.
std::vector<cplx> dft(std::vector<cplx> data, Direction dir) {
    const int n = static_cast<int>(data.size());
    std::vector<cplx> out(data.size());
    auto* in_ptr = reinterpret_cast<fftw_complex*>(data.data());
    auto* out_ptr = reinterpret_cast<fftw_complex*>(out.data());
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_1d(n, in_ptr, out_ptr, dir == Direction::Forward ? FFTW_FORWARD : FFTW_BACKWARD,
                                FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    return out;
}

cplx unit(double angle) { return {std::cos(angle), std::sin(angle)}; }

/// sum_k c_k e^{i freq_k t}. Dense sums use a two-level table of powers so each
/// term costs one multiplication without accumulating round-off.
cplx eval_terms(const std::vector<TrigTerm>& terms, double t) {
    if (terms.size() <= 24) {
        cplx s = 0;
        for (const auto& term : terms) s += term.coef * unit(term.freq * t);
        return s;
    }
    constexpr int kBlock = 64;
    cplx small[kBlock];
    for (int r = 0; r < kBlock; ++r) small[r] = unit(r * t);
    cplx s = 0;
    int current_q = std::numeric_limits<int>::min();
    cplx big = 1;
    for (const auto& term : terms) {
        const int q = (term.freq >= 0) ? term.freq / kBlock : -((-term.freq + kBlock - 1) / kBlock);
        const int r = term.freq - q * kBlock;
        if (q != current_q) {
            big = unit(static_cast<double>(q) * kBlock * t);
            current_q = q;
        }
        s += term.coef * big * small[r];
    }
    return s;
}

}  // namespace

PeriodicFunction PeriodicFunction::from_terms(std::vector<TrigTerm> terms, Representation rep,
                                              std::size_t grid, int max_order) {
    std::sort(terms.begin(), terms.end(), [](const TrigTerm& x, const TrigTerm& y) { return x.freq < y.freq; });
    std::vector<TrigTerm> merged;
    for (const auto& term : terms) {
        if (!merged.empty() && merged.back().freq == term.freq) {
            merged.back().coef += term.coef;
        } else {
            merged.push_back(term);
        }
    }
    std::erase_if(merged, [](const TrigTerm& x) { return x.coef == cplx(0, 0); });
    PeriodicFunction f;
    f.terms_ = std::move(merged);
    f.rep_ = rep;
    f.grid_ = grid;
    f.max_order_ = max_order;
    return f;
}

PeriodicFunction PeriodicFunction::trig(std::vector<TrigTerm> terms) {
    for (const auto& term : terms) {
        if (!std::isfinite(term.coef.real()) || !std::isfinite(term.coef.imag())) {
            throw Error(ErrorKind::InvalidArgument, "non-finite trigonometric coefficient");
        }
    }
    return from_terms(std::move(terms), Representation::Trig, 0, -1);
}

PeriodicFunction PeriodicFunction::constant(cplx value) { return trig({{0, value}}); }

PeriodicFunction PeriodicFunction::exponential(int freq, cplx coef) { return trig({{freq, coef}}); }

PeriodicFunction PeriodicFunction::cosine(int freq, double amp) {
    if (freq == 0) return constant(amp);
    return trig({{freq, amp / 2}, {-freq, amp / 2}});
}

PeriodicFunction PeriodicFunction::sine(int freq, double amp) {
    if (freq == 0) return {};
    return trig({{freq, cplx(0, -amp / 2)}, {-freq, cplx(0, amp / 2)}});
}

PeriodicFunction PeriodicFunction::from_samples(const std::vector<cplx>& samples, int max_order, double chop_rel) {
    const std::size_t n = samples.size();
    if (n == 0) throw Error(ErrorKind::InvalidArgument, "sampled function needs at least one sample");
    if (max_order < 0) throw Error(ErrorKind::InvalidArgument, "max_order must be nonnegative");
    for (std::size_t k = 0; k < n; ++k) {
        if (!std::isfinite(samples[k].real()) || !std::isfinite(samples[k].imag())) {
            throw NumericError(kTwoPi * static_cast<double>(k) / static_cast<double>(n),
                               "non-finite sample at index " + std::to_string(k));
        }
    }
    const auto coeffs = dft(samples, Direction::Forward);
    const double inv_n = 1.0 / static_cast<double>(n);
    std::vector<TrigTerm> terms;
    terms.reserve(n + 1);
    const long half = static_cast<long>(n) / 2;
    for (std::size_t k = 0; k < n; ++k) {
        const cplx c = coeffs[k] * inv_n;
        const long kk = static_cast<long>(k);
        if (n % 2 == 0 && kk == half) {
            // Nyquist coefficient split symmetrically between +-N/2
            terms.push_back({static_cast<int>(half), c / 2.0});
            terms.push_back({static_cast<int>(-half), c / 2.0});
        } else {
            terms.push_back({static_cast<int>(kk <= half ? kk : kk - static_cast<long>(n)), c});
        }
    }
    if (chop_rel > 0) {
        double peak = 0;
        for (const auto& t : terms) peak = std::max(peak, std::abs(t.coef));
        const double floor = chop_rel * peak;
        std::erase_if(terms, [&](const TrigTerm& t) { return std::abs(t.coef) <= floor; });
    }
    return from_terms(std::move(terms), Representation::Sampled, n, max_order);
}

PeriodicFunction PeriodicFunction::sample(const std::function<cplx(double)>& fn, std::size_t n, int max_order,
                                          double chop_rel) {
    std::vector<cplx> values(n);
    for (std::size_t k = 0; k < n; ++k) values[k] = fn(kTwoPi * static_cast<double>(k) / static_cast<double>(n));
    return from_samples(values, max_order, chop_rel);
}

cplx PeriodicFunction::coefficient(int freq) const {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), freq,
                               [](const TrigTerm& x, int f) { return x.freq < f; });
    return (it != terms_.end() && it->freq == freq) ? it->coef : cplx(0, 0);
}

int PeriodicFunction::max_abs_frequency() const {
    int m = 0;
    for (const auto& t : terms_) m = std::max(m, std::abs(t.freq));
    return m;
}

bool PeriodicFunction::is_constant() const {
    return terms_.empty() || (terms_.size() == 1 && terms_.front().freq == 0);
}

cplx PeriodicFunction::operator()(double t) const { return eval_terms(terms_, t); }

std::vector<cplx> PeriodicFunction::values_on_grid(std::size_t n) const {
    std::vector<cplx> out(n);
    if (n == 0) return out;
    if (terms_.size() <= 24) {
        for (std::size_t k = 0; k < n; ++k) {
            const double t = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
            out[k] = eval_terms(terms_, t);
        }
        return out;
    }
    // Aliasing-aware placement: on the grid e^{i f t_k} depends only on f mod n.
    std::vector<cplx> slots(n, cplx(0, 0));
    const long nn = static_cast<long>(n);
    for (const auto& term : terms_) {
        const long idx = ((static_cast<long>(term.freq) % nn) + nn) % nn;
        slots[static_cast<std::size_t>(idx)] += term.coef;
    }
    return dft(std::move(slots), Direction::Backward);
}

PeriodicFunction PeriodicFunction::real_part() const {
    std::vector<TrigTerm> out;
    out.reserve(2 * terms_.size());
    for (const auto& t : terms_) {
        out.push_back({t.freq, t.coef / 2.0});
        out.push_back({-t.freq, std::conj(t.coef) / 2.0});
    }
    return from_terms(std::move(out), rep_, grid_, max_order_);
}

PeriodicFunction PeriodicFunction::imag_part() const {
    std::vector<TrigTerm> out;
    out.reserve(2 * terms_.size());
    const cplx inv_2i(0, -0.5);
    for (const auto& t : terms_) {
        out.push_back({t.freq, t.coef * inv_2i});
        out.push_back({-t.freq, -std::conj(t.coef) * inv_2i});
    }
    return from_terms(std::move(out), rep_, grid_, max_order_);
}

PeriodicFunction PeriodicFunction::operator+(const PeriodicFunction& other) const {
    std::vector<TrigTerm> all = terms_;
    all.insert(all.end(), other.terms_.begin(), other.terms_.end());
    const bool both_exact = exact() && other.exact();
    int order = -1;
    if (max_order_ >= 0 && other.max_order_ >= 0) {
        order = std::min(max_order_, other.max_order_);
    } else {
        order = std::max(max_order_, other.max_order_);
    }
    return from_terms(std::move(all), both_exact ? Representation::Trig : Representation::Sampled,
                      std::max(grid_, other.grid_), both_exact ? -1 : order);
}

PeriodicFunction PeriodicFunction::operator-(const PeriodicFunction& other) const {
    return *this + other * cplx(-1, 0);
}

PeriodicFunction PeriodicFunction::operator*(cplx s) const {
    std::vector<TrigTerm> out = terms_;
    for (auto& t : out) t.coef *= s;
    return from_terms(std::move(out), rep_, grid_, max_order_);
}

PeriodicFunction derivative(const PeriodicFunction& f, int gamma) {
    if (gamma < 0) throw Error(ErrorKind::InvalidArgument, "derivative order must be nonnegative");
    if (gamma == 0) return f;
    if (f.max_order() >= 0 && gamma > f.max_order()) {
        throw Error(ErrorKind::UnsupportedOrder, "derivative of order " + std::to_string(gamma) +
                                                     " exceeds supported order " +
                                                     std::to_string(f.max_order()));
    }
    std::vector<TrigTerm> out = f.terms();
    // One factor (i tau) at a time, so derivative(derivative(f, a), b) == derivative(f, a + b) bitwise.
    for (auto& t : out) {
        const double tau = static_cast<double>(t.freq);
        for (int g = 0; g < gamma; ++g) t.coef = cplx(-t.coef.imag() * tau, t.coef.real() * tau);
    }
    if (f.exact()) return PeriodicFunction::trig(std::move(out));
    return PeriodicFunction::from_terms(std::move(out), f.representation(), f.grid_size(), f.max_order() - gamma);
}

double sup_norm(const PeriodicFunction& f, std::size_t density) {
    if (f.is_zero()) return 0;
    if (f.is_constant()) return std::abs(f.coefficient(0));
    const std::size_t n = std::max({density, 2 * f.grid_size(), std::size_t{1}});
    double s = 0;
    for (const auto& v : f.values_on_grid(n)) s = std::max(s, std::abs(v));
    return s;
}

cplx mean(const PeriodicFunction& f) { return f.coefficient(0); }

Primitive::Primitive(const PeriodicFunction& f, double eta) : eta_(eta) {
    for (const auto& t : f.terms()) {
        if (t.freq == 0) {
            mean_ = t.coef;
            continue;
        }
        const cplx c = t.coef / cplx(0, static_cast<double>(t.freq));
        integrated_.push_back({t.freq, c});
    }
    offset_ = eval_terms(integrated_, eta);
}

cplx Primitive::operator()(double t) const { return mean_ * (t - eta_) + eval_terms(integrated_, t) - offset_; }

Primitive primitive_from(const PeriodicFunction& f, double eta) { return Primitive(f, eta); }

GevreyNormEstimate gevrey_norm(const PeriodicFunction& f, double sigma, double eta, int gamma_max,
                               std::size_t density) {
    if (!(sigma >= 1)) throw Error(ErrorKind::InvalidArgument, "Gevrey order sigma must be >= 1");
    if (!(eta > 0)) throw Error(ErrorKind::InvalidArgument, "Gevrey radius eta must be positive");
    if (gamma_max < 0) throw Error(ErrorKind::InvalidArgument, "gamma_max must be nonnegative");
    GevreyNormEstimate est{sigma, eta, gamma_max, 0, 0};
    for (int g = 0; g <= gamma_max; ++g) {
        const double s = sup_norm(derivative(f, g), density);
        if (s == 0) continue;
        const double term = std::exp(std::log(s) - g * std::log(eta) - sigma * std::lgamma(g + 1.0));
        if (term > est.value) {
            est.value = term;
            est.argmax_gamma = g;
        }
    }
    return est;
}

double log_max_power_exponential(int tau, double p, double q, double mu) {
    if (tau < 0 || !(p > 0) || !(q > 0) || !(mu > 0)) {
        throw Error(ErrorKind::InvalidArgument, "log_max_power_exponential needs tau >= 0 and p, q, mu > 0");
    }
    if (tau == 0) return 0;  // sup of e^{-mu A^q} is 1 at A = 0
    const double k = tau * p / q;
    return k * std::log(tau * p / (mu * q)) - k;
}

double normalized_power_exponential(int tau, double p, double q, double mu) {
    if (tau < 1) throw Error(ErrorKind::InvalidArgument, "normalized_power_exponential needs tau >= 1");
    return std::exp(log_max_power_exponential(tau, p, q, mu) / tau - (p / (q * tau)) * std::lgamma(tau + 1.0));
}

double smooth_step(double x) {
    if (x <= 0) return 0;
    if (x >= 1) return 1;
    const double g = 1 / x - 1 / (1 - x);
    return 1 / (1 + std::exp(g));
}

double smooth_step_derivative(double x) {
    if (x <= 0 || x >= 1) return 0;
    const double s = smooth_step(x);
    return s * (1 - s) * (1 / (x * x) + 1 / ((1 - x) * (1 - x)));
}

BumpProfile::BumpProfile(double a, double b, double c, double d) : a_(a), b_(b), c_(c), d_(d) {
    if (!(a < c && c < d && d < b)) {
        throw Error(ErrorKind::InvalidSupport, "bump requires a < c < d < b");
    }
    if (b - a > kTwoPi * (1 + 1e-12)) {
        throw Error(ErrorKind::InvalidSupport, "bump support longer than one period");
    }
}

double BumpProfile::reduce(double t) const {
    double r = std::fmod(t - a_, kTwoPi);
    if (r < 0) r += kTwoPi;
    return a_ + r;
}

double BumpProfile::operator()(double t) const {
    const double s = reduce(t);
    if (s >= b_) return 0;
    if (s < c_) return smooth_step((s - a_) / (c_ - a_));
    if (s <= d_) return 1;
    return smooth_step((b_ - s) / (b_ - d_));
}

double BumpProfile::derivative(double t) const {
    const double s = reduce(t);
    if (s >= b_ || (s >= c_ && s <= d_)) return 0;
    if (s < c_) return smooth_step_derivative((s - a_) / (c_ - a_)) / (c_ - a_);
    return -smooth_step_derivative((b_ - s) / (b_ - d_)) / (b_ - d_);
}

PeriodicFunction bump(std::pair<double, double> support, std::pair<double, double> plateau, std::size_t grid,
                      int max_order) {
    const auto [a, b] = support;
    const auto [c, d] = plateau;
    if (a < 0 || b > kTwoPi) throw Error(ErrorKind::InvalidSupport, "bump support must lie in [0, 2*pi]");
    const BumpProfile profile(a, b, c, d);
    return PeriodicFunction::sample([&](double t) { return cplx(profile(t), 0); }, grid, max_order);
}

}  // namespace ghlab
