#include "ghlab/diophantine.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <mutex>
#include <ostream>
#include <sstream>

#include <mpfr.h>

namespace ghlab {

namespace {

std::recursive_mutex& precision_mutex() {
    static std::recursive_mutex m;
    return m;
}

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

mpz pow10(unsigned long e) {
    mpz r;
    mpz_ui_pow_ui(r.backend().data(), 10, e);
    return r;
}

unsigned long factorial(int k) {
    unsigned long f = 1;
    for (int i = 2; i <= k; ++i) f *= static_cast<unsigned long>(i);
    return f;
}

/// Floor division remainder in [0, den).
mpz floor_mod(const mpz& x, const mpz& den) {
    mpz r = x % den;
    if (r < 0) r += den;
    return r;
}

double log10_ratio(const mpz& num, const mpz& den) {
    if (num == 0) return kNegInf;
    PrecisionScope scope(40);
    return static_cast<double>(boost::multiprecision::log10(mpfr(num)) - boost::multiprecision::log10(mpfr(den)));
}

double log10_of(const std::string& integer) {
    PrecisionScope scope(30);
    return static_cast<double>(boost::multiprecision::log10(mpfr(mpz(integer))));
}

double to_double_or_zero(double log10_value) {
    if (log10_value == kNegInf) return 0;
    return log10_value < -300 ? 0 : std::pow(10.0, log10_value);
}

std::string trim_number(std::string s) {
    s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
    return s;
}

mpz parse_integer(const std::string& s, const std::string& whole) {
    if (s.empty() || s.find_first_not_of("+-0123456789") != std::string::npos ||
        s.find_first_of("+-", 1) != std::string::npos) {
        throw Error(ErrorKind::InvalidArgument, "cannot parse alpha '" + whole + "'");
    }
    // mpz treats a leading 0 as octal
    std::string sign = (s[0] == '-') ? "-" : "";
    std::string digits = (s[0] == '+' || s[0] == '-') ? s.substr(1) : s;
    digits.erase(0, std::min(digits.find_first_not_of('0'), digits.size() - 1));
    if (digits.empty()) throw Error(ErrorKind::InvalidArgument, "cannot parse alpha '" + whole + "'");
    return mpz(sign + digits);
}

bool lambda_is_integral(double v) { return v == std::floor(v) && std::abs(v) < 9.0e15; }

std::string fmt_eps(double e) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, e);
    return std::string(buf, res.ptr);
}

nlohmann::json finite_or_null(double x) {
    if (std::isfinite(x)) return x;
    return nullptr;
}

}  // namespace

PrecisionScope::PrecisionScope(unsigned digits) {
    precision_mutex().lock();
    saved_ = mpfr::default_precision();
    mpfr::default_precision(std::max(20u, digits));
}

PrecisionScope::~PrecisionScope() {
    mpfr::default_precision(saved_);
    precision_mutex().unlock();
}

Alpha Alpha::rational(mpz num, mpz den) {
    if (den == 0) throw Error(ErrorKind::InvalidArgument, "alpha denominator is zero");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const mpz g = boost::multiprecision::gcd(num, den);
    Alpha a;
    a.num_ = g == 0 ? num : mpz(num / g);
    a.den_ = g == 0 ? den : mpz(den / g);
    if (a.num_ == 0) a.den_ = 1;
    a.expr_ = a.num_.str() + (a.den_ == 1 ? "" : "/" + a.den_.str());
    return a;
}

Alpha Alpha::parse(const std::string& raw) {
    const std::string s = trim_number(raw);
    if (s.empty()) throw Error(ErrorKind::InvalidArgument, "empty alpha expression");

    if (s.rfind("liouville:", 0) == 0) {
        const int K = std::stoi(s.substr(10));
        if (K < 1 || K > 9) throw Error(ErrorKind::InvalidArgument, "liouville depth must be in [1, 9]");
        const unsigned long top = factorial(K);
        mpz num = 0;
        for (int k = 1; k <= K; ++k) num += pow10(top - factorial(k));
        Alpha a = rational(num, pow10(top));
        a.expr_ = s;
        return a;
    }
    if (s.rfind("sqrt", 0) == 0) {
        std::string inner = s.substr(4);
        if (!inner.empty() && inner.front() == '(' && inner.back() == ')') inner = inner.substr(1, inner.size() - 2);
        const mpz n = parse_integer(inner, raw);
        if (n < 0) throw Error(ErrorKind::InvalidArgument, "sqrt of a negative number in alpha '" + raw + "'");
        const mpz r = boost::multiprecision::sqrt(n);
        Alpha a;
        if (r * r == n) {
            a = rational(r, 1);
        } else {
            a.radicand_ = n;
        }
        a.expr_ = s;
        return a;
    }
    if (const auto slash = s.find('/'); slash != std::string::npos) {
        Alpha a = rational(parse_integer(s.substr(0, slash), raw), parse_integer(s.substr(slash + 1), raw));
        a.expr_ = s;
        return a;
    }
    // decimal with optional exponent
    std::string mant = s;
    long exp10 = 0;
    if (const auto e = s.find_first_of("eE"); e != std::string::npos) {
        mant = s.substr(0, e);
        try {
            exp10 = std::stol(s.substr(e + 1));
        } catch (...) {
            throw Error(ErrorKind::InvalidArgument, "cannot parse alpha '" + raw + "'");
        }
    }
    std::string digits = mant;
    if (const auto dot = mant.find('.'); dot != std::string::npos) {
        digits = mant.substr(0, dot) + mant.substr(dot + 1);
        exp10 -= static_cast<long>(mant.size() - dot - 1);
    }
    if (digits == "" || digits == "+" || digits == "-") throw Error(ErrorKind::InvalidArgument, "cannot parse alpha '" + raw + "'");
    mpz num = parse_integer(digits, raw);
    mpz den = 1;
    if (exp10 >= 0) {
        num *= pow10(static_cast<unsigned long>(exp10));
    } else {
        den = pow10(static_cast<unsigned long>(-exp10));
    }
    Alpha a = rational(num, den);
    a.expr_ = s;
    return a;
}

Alpha Alpha::from_double(double x) {
    if (!std::isfinite(x)) throw Error(ErrorKind::InvalidArgument, "alpha must be finite");
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return parse(std::string(buf, res.ptr));
}

mpfr Alpha::value() const {
    if (radicand_) return boost::multiprecision::sqrt(mpfr(*radicand_));
    return mpfr(num_) / mpfr(den_);
}

double Alpha::approx() const {
    PrecisionScope scope(30);
    return static_cast<double>(value());
}

NearestGap nearest_integer_gap(double alpha, double lambda) {
    const double x = alpha * lambda;
    const double tau = std::round(x);
    return {static_cast<long long>(tau), std::abs(tau - x)};
}

ExactGap nearest_integer_gap(const Alpha& alpha, const mpz& lambda) {
    ExactGap g;
    g.exact = true;
    if (alpha.is_rational()) {
        const mpz x = alpha.numerator() * lambda;
        const mpz& q = alpha.denominator();
        const mpz r = floor_mod(x, q);
        const mpz base = (x - r) / q;
        mpz gap_num;
        if (2 * r <= q) {
            g.tau = base.str();
            gap_num = r;
        } else {
            g.tau = mpz(base + 1).str();
            gap_num = q - r;
        }
        g.zero = gap_num == 0;
        g.log10_gap = log10_ratio(gap_num, q);
    } else {
        // alpha lambda = sqrt(N lambda^2): the nearest integer is decided in integers,
        // the gap |tau^2 - N lambda^2| / (tau + alpha lambda) in MPFR.
        const mpz n2 = *alpha.radicand() * lambda * lambda;
        const mpz s = boost::multiprecision::sqrt(n2);
        // round up when (2s + 1)^2 < 4 n2
        mpz tau = (2 * s + 1) * (2 * s + 1) < 4 * n2 ? mpz(s + 1) : s;
        const mpz diff = tau * tau - n2;
        g.zero = diff == 0;
        if (!g.zero) {
            PrecisionScope scope(40);
            const mpfr denom = mpfr(tau) + boost::multiprecision::sqrt(mpfr(n2));
            g.log10_gap = static_cast<double>(boost::multiprecision::log10(abs(mpfr(diff)) / denom));
        } else {
            g.log10_gap = kNegInf;
        }
        if (lambda < 0) tau = -tau;
        g.tau = tau.str();
    }
    g.j = "";
    g.gap = to_double_or_zero(g.log10_gap);
    return g;
}

ExactGap nearest_integer_gap(const Alpha& alpha, const mpfr& lambda, unsigned digits) {
    PrecisionScope scope(digits);
    const mpfr x = alpha.value() * lambda;
    const mpfr tau = boost::multiprecision::round(x);
    const mpfr gap = abs(x - tau);
    ExactGap g;
    g.exact = false;
    g.zero = gap == 0;
    g.log10_gap = g.zero ? kNegInf : static_cast<double>(boost::multiprecision::log10(gap));
    mpz z;
    mpfr_get_z(z.backend().data(), tau.backend().data(), MPFR_RNDN);
    g.tau = z.str();
    g.gap = to_double_or_zero(g.log10_gap);
    return g;
}

const char* to_string(DiophantineReport::Verdict v) {
    return v == DiophantineReport::Verdict::HoldsUpToJ ? "holds-up-to-J" : "fails-evidence";
}

namespace {

/// Gap at a stored index, exact whenever lambda_j is an integer.
ExactGap stored_gap(const Alpha& alpha, double lambda, unsigned digits) {
    if (lambda_is_integral(lambda)) return nearest_integer_gap(alpha, mpz(static_cast<long long>(lambda)));
    PrecisionScope scope(digits);
    return nearest_integer_gap(alpha, mpfr(lambda), digits);
}

/// Gap at an arbitrary index through the generating Weyl model.
std::optional<ExactGap> probe_gap(const Alpha& alpha, const EigenvalueSequence& seq, const mpz& j, unsigned digits) {
    if (j >= 1 && j <= seq.size()) return stored_gap(alpha, seq.lambda(static_cast<std::size_t>(j)), digits);
    if (!seq.model()) return std::nullopt;
    const WeylModel& m = *seq.model();
    const double r = m.exponent();
    if (!m.log_branch() && r == 1.0 && lambda_is_integral(m.scale)) {
        return nearest_integer_gap(alpha, mpz(static_cast<long long>(m.scale)) * j);
    }
    PrecisionScope scope(digits);
    const mpfr jj(j);
    mpfr lambda = m.log_branch() ? mpfr(m.scale) * pow(jj / log(jj), mpfr(r)) : mpfr(m.scale) * pow(jj, mpfr(r));
    return nearest_integer_gap(alpha, lambda, digits);
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2) return 0;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx == 0 ? 0 : sxy / sxx;
}

unsigned digits_for(const Alpha& alpha, double log10_lambda_max, unsigned requested) {
    const double mag = std::max(0.0, std::log10(std::abs(alpha.approx()) + 1) + log10_lambda_max);
    const auto need = static_cast<unsigned>(std::ceil(mag)) + 40;
    return std::max(requested, need);
}

}  // namespace

DiophantineReport check_condition_A(const Alpha& alpha, const EigenvalueSequence& seq, std::size_t J,
                                    std::vector<double> epsilons, const DiophantineOptions& opts) {
    if (J < 1 || J > seq.size()) {
        throw Error(ErrorKind::InvalidArgument, "J = " + std::to_string(J) + " must lie in [1, " +
                                                    std::to_string(seq.size()) + "]");
    }
    if (epsilons.empty()) throw Error(ErrorKind::InvalidArgument, "epsilon list is empty");
    for (double e : epsilons) {
        if (!(e > 0)) throw Error(ErrorKind::InvalidArgument, "epsilons must be positive");
    }

    std::vector<std::string> probes = opts.probes;
    if (probes.empty() && opts.auto_probes && alpha.expr().rfind("liouville:", 0) == 0) {
        const int K = std::stoi(alpha.expr().substr(10));
        for (int k = 1; k <= K; ++k) probes.push_back(pow10(factorial(k)).str());
    }

    double log10_max = std::log10(std::max(1.0, *std::max_element(seq.values().begin(), seq.values().begin() + J)));
    for (const auto& p : probes) log10_max = std::max(log10_max, static_cast<double>(p.size()));

    DiophantineReport rep;
    rep.alpha = alpha.expr();
    rep.J = J;
    rep.epsilons = epsilons;
    rep.digits = digits_for(alpha, log10_max, opts.digits);

    rep.gaps.reserve(J);
    std::vector<std::size_t> zeros;
    for (std::size_t j = 1; j <= J; ++j) {
        ExactGap g = stored_gap(alpha, seq.lambda(j), rep.digits);
        g.j = std::to_string(j);
        if (g.zero) zeros.push_back(j);
        rep.gaps.push_back(std::move(g));
    }
    for (const auto& p : probes) {
        const mpz j(p);
        auto g = probe_gap(alpha, seq, j, rep.digits);
        if (!g) continue;
        g->j = p;
        rep.probe_gaps.push_back(std::move(*g));
    }

    // Doubling checkpoints ending at J.
    std::vector<std::size_t> marks;
    for (std::size_t m = std::max<std::size_t>(1, opts.first_checkpoint); m < J; m *= 2) marks.push_back(m);
    marks.push_back(J);

    const double log10_floor = std::log10(opts.collapse_floor);
    bool all_collapsed = true;
    for (double eps : epsilons) {
        EpsilonFit fit;
        fit.epsilon = eps;
        double best = std::numeric_limits<double>::infinity();  // log10(j^eps gap)
        std::size_t mark = 0;
        for (std::size_t j = 1; j <= J; ++j) {
            const double v = eps * std::log10(double(j)) + rep.gaps[j - 1].log10_gap;
            if (v < best) {
                best = v;
                fit.argmin_j = j;
            }
            if (mark < marks.size() && j == marks[mark]) {
                fit.checkpoints.emplace_back(j, to_double_or_zero(best));
                ++mark;
            }
        }
        fit.C = to_double_or_zero(best);
        std::vector<double> lx, ly;
        bool zero_seen = false;
        for (const auto& [jj, c] : fit.checkpoints) {
            if (c == 0) zero_seen = true;
            lx.push_back(std::log(double(jj)));
            ly.push_back(std::log(c));
        }
        fit.trend_slope = zero_seen ? kNegInf : ls_slope(lx, ly);
        for (const auto& g : rep.probe_gaps) {
            const double w = g.zero ? kNegInf : eps * log10_of(g.j) + g.log10_gap;
            if (w < fit.probe_log10_min) {
                fit.probe_log10_min = w;
                fit.probe_argmin = g.j;
            }
        }
        const double eff = std::min(best, fit.probe_log10_min);
        fit.holds = best >= log10_floor && fit.trend_slope > opts.flat_slope && fit.probe_log10_min >= log10_floor;
        if (eff >= log10_floor) all_collapsed = false;
        rep.fits.push_back(std::move(fit));
    }

    if (!zeros.empty()) {
        rep.verdict = DiophantineReport::Verdict::FailsEvidence;
        for (std::size_t i = 0; i < std::min<std::size_t>(zeros.size(), 16); ++i) rep.witness.push_back(std::to_string(zeros[i]));
        rep.reason = "exact zero gap at j = " + rep.witness.front();
    } else if (all_collapsed) {
        rep.verdict = DiophantineReport::Verdict::FailsEvidence;
        for (const auto& g : rep.probe_gaps) rep.witness.push_back(g.j);
        for (const auto& f : rep.fits) {
            const std::string j = std::to_string(f.argmin_j);
            if (std::find(rep.witness.begin(), rep.witness.end(), j) == rep.witness.end()) rep.witness.push_back(j);
        }
        rep.reason = "every j^eps * gap infimum falls below " + fmt_eps(opts.collapse_floor);
    } else {
        rep.verdict = DiophantineReport::Verdict::HoldsUpToJ;
        const EpsilonFit* chosen = nullptr;
        for (const auto& f : rep.fits) {
            if (f.holds && (!chosen || f.epsilon < chosen->epsilon)) chosen = &f;
        }
        if (chosen) {
            rep.reason = "C_eps bounded away from zero with a flat trend across doubling checkpoints";
        } else {
            for (const auto& f : rep.fits) {
                if (!chosen || f.epsilon > chosen->epsilon) chosen = &f;
            }
            rep.reason = "no collapse below the floor, but no epsilon shows a flat trend";
        }
        rep.held_epsilon = chosen->epsilon;
        rep.held_C = chosen->C;
    }
    return rep;
}

unsigned liouville_required_digits(int K) {
    return static_cast<unsigned>(factorial(K) + factorial(K - 1) + 5);
}

LiouvilleCertificate construct_liouville(int K, unsigned digits) {
    if (K < 2) throw Error(ErrorKind::InvalidArgument, "Liouville depth must be at least 2");
    if (K > 9) throw Error(ErrorKind::InvalidArgument, "Liouville depth above 9 is not supported");
    LiouvilleCertificate c;
    c.K = K;
    c.required_digits = liouville_required_digits(K);
    if (digits != 0 && digits < c.required_digits) {
        throw PrecisionError(c.required_digits, "Liouville depth " + std::to_string(K) + " needs " +
                                                    std::to_string(c.required_digits) + " digits, got " +
                                                    std::to_string(digits));
    }
    c.alpha = Alpha::parse("liouville:" + std::to_string(K));
    const unsigned long top = factorial(K);
    std::string dec(top, '0');
    for (int k = 1; k <= K; ++k) dec[factorial(k) - 1] = '1';
    c.alpha_decimal = "0." + dec;
    for (int k = 1; k <= K; ++k) {
        LiouvilleEntry e;
        e.k = k;
        const mpz j = pow10(factorial(k));
        const ExactGap g = nearest_integer_gap(c.alpha, j);
        e.j = "1e" + std::to_string(factorial(k));
        e.tau = g.tau;
        e.log10_gap = g.log10_gap;
        e.log10_bound = std::log10(2.0) + static_cast<double>(factorial(k)) - static_cast<double>(factorial(k + 1));
        e.holds = g.zero || g.log10_gap <= e.log10_bound + 1e-12;
        c.entries.push_back(std::move(e));
    }
    return c;
}

nlohmann::json to_json(const DiophantineReport& r) {
    nlohmann::json j;
    j["alpha"] = r.alpha;
    j["J"] = r.J;
    j["digits"] = r.digits;
    j["epsilons"] = r.epsilons;
    nlohmann::json per = nlohmann::json::object();
    for (const auto& f : r.fits) {
        nlohmann::json cps = nlohmann::json::array();
        for (const auto& [jj, c] : f.checkpoints) cps.push_back({jj, c});
        per[fmt_eps(f.epsilon)] = {{"C", f.C},
                                   {"argmin_j", f.argmin_j},
                                   {"checkpoints", cps},
                                   {"trend_slope", finite_or_null(f.trend_slope)},
                                   {"probe_log10_min", finite_or_null(f.probe_log10_min)},
                                   {"probe_argmin", f.probe_argmin},
                                   {"holds", f.holds}};
    }
    j["per_eps"] = per;
    nlohmann::json probes = nlohmann::json::array();
    for (const auto& g : r.probe_gaps) {
        probes.push_back({{"j", g.j}, {"tau", g.tau}, {"log10_gap", finite_or_null(g.log10_gap)}, {"zero", g.zero}});
    }
    j["probes"] = probes;
    j["verdict"] = to_string(r.verdict);
    if (r.verdict == DiophantineReport::Verdict::HoldsUpToJ) {
        j["held"] = {{"epsilon", r.held_epsilon}, {"C", r.held_C}};
    }
    j["witness"] = r.witness;
    j["reason"] = r.reason;
    return j;
}

nlohmann::json to_json(const LiouvilleCertificate& c) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : c.entries) {
        entries.push_back({{"k", e.k},
                           {"j", e.j},
                           {"tau", e.tau},
                           {"log10_gap", finite_or_null(e.log10_gap)},
                           {"log10_bound", e.log10_bound},
                           {"holds", e.holds}});
    }
    return {{"K", c.K}, {"alpha", c.alpha_decimal}, {"required_digits", c.required_digits}, {"certificate", entries}};
}

void write_gaps_csv(std::ostream& os, const DiophantineReport& r) {
    os << "j,tau,gap,log10_gap\n";
    const auto old = os.precision(17);
    for (const auto& g : r.gaps) {
        os << g.j << ',' << g.tau << ',' << g.gap << ',';
        if (std::isfinite(g.log10_gap)) {
            os << g.log10_gap;
        } else {
            os << "-inf";
        }
        os << '\n';
    }
    os.precision(old);
}

}  // namespace ghlab
