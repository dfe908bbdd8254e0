#include "ghlab/hypo_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include <boost/math/tools/minima.hpp>

#include "ghlab/errors.hpp"
#include "ghlab/format.hpp"
#include "parallel.hpp"

namespace ghlab {

namespace {

using Class = SignAnalysis::Classification;

// Critical point of s * P (s = +1: maximum, t*; s = -1: minimum, t_*) together with
// a window of length 2 pi on which s * B_t stays <= 0, and a partition around it.
struct Located {
    bool ok = false;
    double t = 0, t0 = 0;
    Partition part;
    std::string note;
};

Located locate(const PeriodicFunction& b, const std::vector<double>& P, double drift, int s, const SignOptions& opts) {
    Located out;
    const std::size_t n = P.size();
    const double h = kTwoPi / static_cast<double>(n);
    auto ext = [&](long long m) {
        const long long q = m >= 0 ? m / static_cast<long long>(n) : -((-m + static_cast<long long>(n) - 1) / static_cast<long long>(n));
        const long long r = m - q * static_cast<long long>(n);
        return s * (P[static_cast<std::size_t>(r)] + static_cast<double>(q) * drift);
    };
    double pscale = 1;
    for (double p : P) pscale = std::max(pscale, std::abs(p));
    const double tol = 1e-10 * pscale;

    long long best_k = -1;
    std::size_t best_reach = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const long long kk = static_cast<long long>(k);
        const double v = ext(kk);
        if (!(v >= ext(kk - 1) && v >= ext(kk + 1))) continue;
        std::size_t R = 0, L = 0;
        while (R < n && ext(kk + static_cast<long long>(R) + 1) <= v + tol) ++R;
        while (L < n && ext(kk - static_cast<long long>(L) - 1) <= v + tol) ++L;
        if (L + R < n) continue;
        const std::size_t reach = std::min(L, R);
        if (best_k < 0 || reach > best_reach) {
            best_k = kk;
            best_reach = reach;
        }
    }
    if (best_k < 0) {
        out.note = "no critical point with a full window";
        return out;
    }

    // Refine to the sign change of s * b next to the grid point.
    double t = h * static_cast<double>(best_k);
    auto sb = [&](double x) { return s * b(x).real(); };
    double lo = t - h, hi = t + h;
    if (sb(t) > 0) lo = t;
    else if (sb(t) < 0) hi = t;
    if (sb(lo) > 0 && sb(hi) < 0) {
        for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(t)); ++it) {
            const double mid = 0.5 * (lo + hi);
            (sb(mid) > 0 ? lo : hi) = mid;
        }
        t = 0.5 * (lo + hi);
    }
    out.t = t;

    std::size_t L = 0, R = 0;
    const double v = ext(best_k);
    while (R < n && ext(best_k + static_cast<long long>(R) + 1) <= v + tol) ++R;
    while (L < n && ext(best_k - static_cast<long long>(L) - 1) <= v + tol) ++L;
    const double Ld = static_cast<double>(L) * h, Rd = static_cast<double>(R) * h;
    const double eL = std::clamp(std::numbers::pi, kTwoPi - Rd, Ld);
    out.t0 = t - eL;
    const double d = std::min(eL, kTwoPi - eL);

    const Primitive B(b, t);
    auto sB = [&](double x) { return s * B(x).real(); };
    for (std::size_t k = 1; k <= n; ++k) {
        const double x = out.t0 + h * static_cast<double>(k);
        if (sB(x) > tol) {
            out.note = "window validation failed at t = " + shortest(x);
            return out;
        }
    }

    // -max of s B over t +- [w_in, w_out]: sampled, then each sampled local maximum
    // refined by Brent's method on its neighbouring cells.
    auto margin = [&](double w_out, double w_in) {
        constexpr int kPts = 512;
        double m = -std::numeric_limits<double>::infinity();
        for (int side : {-1, 1}) {
            auto val = [&](double r) { return sB(t + side * r); };
            std::vector<double> r(kPts + 1), v(kPts + 1);
            for (int i = 0; i <= kPts; ++i) {
                r[i] = w_in + (w_out - w_in) * i / kPts;
                v[i] = val(r[i]);
                m = std::max(m, v[i]);
            }
            for (int i = 0; i <= kPts; ++i) {
                const bool left = i == 0 || v[i] >= v[i - 1], right = i == kPts || v[i] >= v[i + 1];
                if (!left || !right) continue;
                const double a = r[std::max(i - 1, 0)], c = r[std::min(i + 1, kPts)];
                const auto best = boost::math::tools::brent_find_minima([&](double x) { return -val(x); }, a, c, 52);
                m = std::max(m, -best.second);
            }
        }
        return -m;
    };
    for (double fo : {0.5, 0.6, 0.7, 0.8, 0.9, 0.95}) {
        for (double fi : {0.5, 0.6, 0.7, 0.8, 0.9, 0.95}) {
            const double w_out = fo * d, w_in = fi * w_out;
            const double m = margin(w_out, w_in);
            if (m >= opts.margin_floor) {
                out.part = {t - w_out, t - w_in, t, t + w_in, t + w_out, m};
                out.ok = true;
                return out;
            }
        }
    }
    out.note = "no partition reaches the margin floor " + shortest(opts.margin_floor);
    return out;
}

}  // namespace

const char* to_string(SignAnalysis::Classification c) {
    switch (c) {
        case Class::PositiveOneSigned: return "positive-one-signed";
        case Class::NegativeOneSigned: return "negative-one-signed";
        case Class::ChangesSign: return "changes-sign";
        case Class::PlateauBetweenSignChange: return "plateau-between-sign-change";
        case Class::IdenticallyZero: return "identically-zero";
    }
    return "?";
}

const char* to_string(Verdict::Result r) {
    switch (r) {
        case Verdict::Result::GH: return "GH";
        case Verdict::Result::NotGH: return "NotGH";
        case Verdict::Result::Indeterminate: return "Indeterminate";
    }
    return "?";
}

SignAnalysis analyze_sign(const PeriodicFunction& b, const SignOptions& opts) {
    if (opts.density < 16) throw Error(ErrorKind::InvalidArgument, "sign grid density must be at least 16");
    SignAnalysis sa;
    if (b.is_zero()) return sa;
    const std::size_t n = std::max(opts.density, 2 * b.grid_size());
    const auto vals = b.values_on_grid(n);
    double scale = 0, imag = 0;
    for (const auto& v : vals) {
        scale = std::max(scale, std::abs(v.real()));
        imag = std::max(imag, std::abs(v.imag()));
    }
    if (imag > 1e-12 * std::max(1.0, scale)) throw Error(ErrorKind::InvalidArgument, "b must be real-valued");
    if (scale == 0) return sa;

    const double tol = opts.zero_tol * scale;
    std::vector<int> sg(n);
    sa.b_min = sa.b_max = vals[0].real();
    for (std::size_t k = 0; k < n; ++k) {
        const double x = vals[k].real();
        sa.b_min = std::min(sa.b_min, x);
        sa.b_max = std::max(sa.b_max, x);
        sg[k] = x > tol ? 1 : (x < -tol ? -1 : 0);
    }
    sa.b0 = mean(b).real();
    const bool pos = std::any_of(sg.begin(), sg.end(), [](int v) { return v > 0; });
    const bool neg = std::any_of(sg.begin(), sg.end(), [](int v) { return v < 0; });
    if (!pos && !neg) return sa;

    // Zero runs on the circle, starting the scan at a nonzero sample.
    const std::size_t start = static_cast<std::size_t>(
        std::find_if(sg.begin(), sg.end(), [](int v) { return v != 0; }) - sg.begin());
    bool sign_change_plateau = false;
    const double h = kTwoPi / static_cast<double>(n);
    for (std::size_t i = 0; i < n;) {
        const std::size_t k = (start + i) % n;
        if (sg[k] != 0) {
            ++i;
            continue;
        }
        std::size_t len = 0;
        while (i + len < n && sg[(start + i + len) % n] == 0) ++len;
        const int before = sg[(start + i + n - 1) % n];
        const int after = sg[(start + i + len) % n];
        if (len >= opts.plateau_min) {
            const double t_begin = h * static_cast<double>(k);
            sa.plateaus.emplace_back(t_begin, std::fmod(t_begin + h * static_cast<double>(len - 1), kTwoPi));
            if (before * after < 0) sign_change_plateau = true;
        }
        i += len;
    }
    sa.hypothesis_met = sa.plateaus.empty();

    if (!neg) {
        sa.classification = Class::PositiveOneSigned;
        return sa;
    }
    if (!pos) {
        sa.classification = Class::NegativeOneSigned;
        sa.theta = -sa.b_max;
        sa.vartheta = -sa.b_min;
        return sa;
    }
    sa.classification = sign_change_plateau ? Class::PlateauBetweenSignChange : Class::ChangesSign;
    if (sa.classification != Class::ChangesSign) return sa;

    const Primitive prim(b, 0.0);
    std::vector<double> P(n);
    for (std::size_t k = 0; k < n; ++k) P[k] = prim(h * static_cast<double>(k)).real();
    const double drift = kTwoPi * sa.b0;
    const auto up = locate(b, P, drift, +1, opts);
    const auto low = locate(b, P, drift, -1, opts);
    if (!up.ok || !low.ok) {
        sa.note = "not-found: " + (up.ok ? low.note : up.note);
        return sa;
    }
    sa.found = true;
    sa.t_star = up.t;
    sa.window_star = up.t0;
    sa.upper = up.part;
    sa.c_star = up.part.margin;
    sa.t_lowstar = low.t;
    sa.window_lowstar = low.t0;
    sa.lower = low.part;
    sa.c_lowstar = low.part.margin;
    return sa;
}

Verdict verdict(const OperatorSpec& op, const VerdictOptions& opts) {
    Verdict v;
    if (op.is_constant()) {
        const auto& cc = op.constant();
        if (cc.omega.imag() != 0) {
            v.result = Verdict::Result::GH;
            v.theorem = "3.4-beta";
            return v;
        }
        if (!op.spectrum()) throw Error(ErrorKind::InvalidArgument, "the Diophantine check needs a spectrum");
        const Alpha alpha = cc.alpha_expr.empty() ? Alpha::from_double(cc.omega.real()) : Alpha::parse(cc.alpha_expr);
        const std::size_t J = std::min(opts.diophantine_J, op.spectrum()->size());
        auto rep = check_condition_A(alpha, *op.spectrum(), J, opts.epsilons, opts.diophantine);
        if (rep.verdict == DiophantineReport::Verdict::FailsEvidence) {
            v.result = Verdict::Result::NotGH;
            v.theorem = "3.4-conditionA-failed";
        } else {
            v.result = Verdict::Result::GH;
            v.theorem = "3.4-conditionA";
            v.truncated = true;
        }
        v.note = rep.reason;
        v.diophantine = std::move(rep);
        return v;
    }

    auto sa = analyze_sign(op.imag_part(), opts.sign);
    switch (sa.classification) {
        case Class::PositiveOneSigned:
        case Class::NegativeOneSigned:
            v.result = Verdict::Result::GH;
            v.theorem = "suff1";
            break;
        case Class::ChangesSign:
            if (sa.hypothesis_met) {
                v.result = Verdict::Result::NotGH;
                v.theorem = "nec1";
                if (!sa.found) v.note = "witness unavailable: " + sa.note;
            } else {
                v.result = Verdict::Result::Indeterminate;
                v.theorem = "nec1-hypothesis-unmet";
                v.note = "b vanishes on a subinterval away from any sign change";
            }
            break;
        case Class::PlateauBetweenSignChange:
            v.result = Verdict::Result::NotGH;
            v.theorem = "plateau-remark";
            break;
        case Class::IdenticallyZero:
            v.result = Verdict::Result::Indeterminate;
            v.theorem = "b-zero-open";
            break;
    }
    v.sign = std::move(sa);
    return v;
}

Counterexample build_counterexample(const OperatorSpec& op, std::size_t J, const CounterexampleOptions& opts) {
    if (op.is_constant()) throw Error(ErrorKind::InvalidArgument, "the witness needs a variable coefficient");
    if (!op.spectrum() || J > op.spectrum()->size())
        throw Error(ErrorKind::InvalidArgument, "spectrum shorter than the requested number of modes");
    if (J == 0) throw Error(ErrorKind::InvalidArgument, "J must be positive");
    const auto& seq = *op.spectrum();
    for (std::size_t j = 1; j <= J; ++j) {
        if (!(seq.lambda(j) > 0)) throw Error(ErrorKind::InvalidArgument, "the witness needs lambda_j > 0");
    }
    Counterexample cx;
    cx.sign = analyze_sign(op.imag_part(), opts.sign);
    if (cx.sign.classification != Class::ChangesSign || !cx.sign.found) {
        throw Error(ErrorKind::InvalidArgument, std::string("the witness needs b to change sign with located partitions (got ") +
                                                    to_string(cx.sign.classification) +
                                                    (cx.sign.note.empty() ? "" : ", " + cx.sign.note) + ")");
    }
    const auto& part = cx.sign.upper;
    const double ts = cx.sign.t_star, t0 = cx.sign.window_star;
    const BumpProfile g(part.alpha, part.beta, part.gamma, part.delta);
    const double e = 0.5 * std::min(part.alpha - t0, t0 + kTwoPi - part.beta);
    const BumpProfile psi(t0 + e, t0 + kTwoPi - e, part.alpha, part.beta);
    const Primitive B(op.imag_part(), ts), A(op.real_part(), ts);

    const std::size_t N = opts.grid;
    struct Point {
        double g = 0, dg = 0, psi = 0, B = 0, A = 0;
    };
    std::vector<Point> pts(N);
    for (std::size_t k = 0; k < N; ++k) {
        const double tau = kTwoPi * static_cast<double>(k) / static_cast<double>(N);
        double r = std::fmod(tau - t0, kTwoPi);
        if (r < 0) r += kTwoPi;
        const double t = t0 + r;
        auto& p = pts[k];
        p.g = g(t);
        p.dg = g.derivative(t);
        if (p.g == 0 && p.dg == 0) continue;
        p.psi = psi(t);
        p.B = B(t).real();
        p.A = A(t).real();
    }

    cx.u.spectrum = cx.f.spectrum = op.spectrum();
    cx.u.modes.resize(J);
    cx.f.modes.resize(J);
    std::vector<std::string> errors(J);
    detail::parallel_for(J, 0, [&](std::size_t i) {
        const double lambda = seq.lambda(i + 1);
        std::vector<cplx> us(N), fs(N);
        for (std::size_t k = 0; k < N; ++k) {
            const auto& p = pts[k];
            if (p.g == 0 && p.dg == 0) continue;
            const double logm = lambda * p.psi * p.B;
            if (logm > 700) {
                errors[i] = "witness exponent " + shortest(logm) + " overflows at mode " + std::to_string(i + 1);
                return;
            }
            const double m = std::exp(logm), ph = -lambda * p.psi * p.A;
            const cplx w(m * std::cos(ph), m * std::sin(ph));
            us[k] = p.g * w;
            fs[k] = cplx(0, -p.dg) * w;
        }
        cx.u.modes[i] = PeriodicFunction::from_samples(us, opts.max_order);
        cx.f.modes[i] = PeriodicFunction::from_samples(fs, opts.max_order);
    });
    for (const auto& err : errors) {
        if (!err.empty()) throw Error(ErrorKind::Overflow, err);
    }
    cx.t_star = std::fmod(ts, kTwoPi);
    if (cx.t_star < 0) cx.t_star += kTwoPi;
    return cx;
}

WitnessCheck check_counterexample(const CoefficientField& u, const CoefficientField& f, const OperatorSpec& op,
                                  double t_star, const WitnessOptions& opts) {
    u.validate();
    f.validate();
    if (u.size() != f.size()) throw Error(ErrorKind::InvalidArgument, "u and f have different lengths");
    if (op.is_constant()) throw Error(ErrorKind::InvalidArgument, "the witness needs a variable coefficient");
    const std::size_t J = u.size();
    const auto& seq = op.spectrum() ? *op.spectrum() : *u.spectrum;
    WitnessCheck w;
    w.residuals.resize(J);
    w.moduli.resize(J);
    w.f_sup.resize(J);
    detail::parallel_for(J, 0, [&](std::size_t i) {
        const std::size_t j = i + 1;
        w.residuals[i] = mode_residual(seq.lambda(j), op.coefficient_function(), u.mode(j), f.mode(j), opts.density);
        w.moduli[i] = std::abs(u.mode(j)(t_star));
        w.f_sup[i] = sup_norm(f.mode(j), opts.density);
    });
    w.u_synthesis = synthesis_membership(u, opts.synthesis);
    w.f_synthesis = synthesis_membership(f, opts.synthesis);

    std::vector<double> x, y;
    for (std::size_t j = 1; j <= J; ++j) {
        if (w.f_sup[j - 1] > 0) {
            x.push_back(seq.lambda(j));
            y.push_back(std::log(w.f_sup[j - 1]));
        }
    }
    w.f_decay_rate = -ls_slope(x, y);

    w.residual_ok = w.modulus_ok = true;
    for (std::size_t j = 1; j <= J; ++j) {
        if (w.residual_ok && !(w.residuals[j - 1] <= opts.residual_tol)) {
            w.residual_ok = false;
            if (w.failure.empty()) {
                w.failing_mode = j;
                w.failure = "mode " + std::to_string(j) + ": residual " + shortest(w.residuals[j - 1]);
            }
        }
        if (w.modulus_ok && !(std::abs(w.moduli[j - 1] - 1) <= opts.modulus_tol)) {
            w.modulus_ok = false;
            if (w.failure.empty()) {
                w.failing_mode = j;
                w.failure = "mode " + std::to_string(j) + ": |u_j(t*)| = " + shortest(w.moduli[j - 1]);
            }
        }
    }
    w.u_rejected = !w.u_synthesis.member;
    w.f_accepted = w.f_synthesis.member;
    if (w.failure.empty() && !w.u_rejected) w.failure = "u passes the synthesis test";
    if (w.failure.empty() && !w.f_accepted)
        w.failure = "f fails the synthesis test at M' = " + std::to_string(w.f_synthesis.rejected_at) + " (slope " +
                    shortest(w.f_synthesis.slope) + ")";
    w.passed = w.residual_ok && w.modulus_ok && w.u_rejected && w.f_accepted;
    return w;
}

WitnessCheck verify_counterexample(const CoefficientField& u, const CoefficientField& f, const OperatorSpec& op,
                                   double t_star, const WitnessOptions& opts) {
    auto w = check_counterexample(u, f, op, t_star, opts);
    if (!w.passed) throw Error(ErrorKind::Verification, "verification-failed: " + w.failure);
    return w;
}

GhExperiment gh_experiment(const OperatorSpec& op, const CoefficientField& f, const GhExperimentOptions& opts) {
    GhExperiment g;
    g.verdict = verdict(op, opts.verdict);
    g.data_synthesis = synthesis_membership(f, opts.synthesis);
    g.precondition = g.verdict.result == Verdict::Result::GH && g.data_synthesis.member;
    g.solution = solve_field(op, f, opts.solver, opts.threads);
    g.solution_regularity = classify_field(g.solution.u, opts.M_max, opts.gamma_max, opts.regularity);
    for (int M = 0; M <= opts.M_max; ++M)
        g.gain.push_back(condition_star_star(g.solution.u, M + 1, opts.gamma_max, opts.regularity).passed);
    for (const auto& m : g.solution.modes) g.divisors.push_back(m.divisor_magnitude);
    g.passed = g.solution_regularity.member &&
               std::all_of(g.gain.begin(), g.gain.end(), [](bool b) { return b; });
    return g;
}

namespace {

nlohmann::json num(double x) {
    if (!std::isfinite(x)) return nullptr;
    return x;
}

nlohmann::json part_json(const Partition& p) {
    return {{"alpha", num(p.alpha)}, {"gamma", num(p.gamma)}, {"t", num(p.t)},
            {"delta", num(p.delta)}, {"beta", num(p.beta)}, {"margin", num(p.margin)}};
}

}  // namespace

nlohmann::json to_json(const SignAnalysis& s) {
    nlohmann::json j;
    j["classification"] = to_string(s.classification);
    j["b_min"] = num(s.b_min);
    j["b_max"] = num(s.b_max);
    j["b0"] = num(s.b0);
    j["hypothesis_met"] = s.hypothesis_met;
    nlohmann::json pl = nlohmann::json::array();
    for (const auto& [a, b] : s.plateaus) pl.push_back({num(a), num(b)});
    j["plateaus"] = pl;
    j["theta"] = s.theta ? num(*s.theta) : nlohmann::json(nullptr);
    j["vartheta"] = s.vartheta ? num(*s.vartheta) : nlohmann::json(nullptr);
    if (s.classification == Class::ChangesSign) {
        j["found"] = s.found;
        if (s.found) {
            j["t_star"] = num(s.t_star);
            j["t_lowstar"] = num(s.t_lowstar);
            j["window_star"] = num(s.window_star);
            j["window_lowstar"] = num(s.window_lowstar);
            j["partition_star"] = part_json(s.upper);
            j["partition_lowstar"] = part_json(s.lower);
            j["c_star"] = num(s.c_star);
            j["c_lowstar"] = num(s.c_lowstar);
        }
    }
    if (!s.note.empty()) j["note"] = s.note;
    return j;
}

nlohmann::json to_json(const Verdict& v) {
    nlohmann::json j;
    j["result"] = to_string(v.result);
    j["theorem"] = v.theorem;
    j["truncated_evidence"] = v.truncated;
    if (!v.note.empty()) j["note"] = v.note;
    if (v.diophantine) {
        j["certificate_ref"] = "diophantine";
        auto d = to_json(*v.diophantine);
        d.erase("gaps");
        j["certificate"] = d;
    } else if (v.sign) {
        j["certificate_ref"] = v.theorem == "nec1" && v.sign->found ? "sign+witness" : "sign";
        j["certificate"] = to_json(*v.sign);
    } else {
        j["certificate_ref"] = nullptr;
    }
    return j;
}

nlohmann::json to_json(const WitnessCheck& w) {
    double rmax = 0, mdev = 0;
    for (double r : w.residuals) rmax = std::max(rmax, r);
    for (double m : w.moduli) mdev = std::max(mdev, std::abs(m - 1));
    nlohmann::json j{{"passed", w.passed},
                     {"residual_ok", w.residual_ok},
                     {"modulus_ok", w.modulus_ok},
                     {"u_rejected", w.u_rejected},
                     {"f_accepted", w.f_accepted},
                     {"max_residual", num(rmax)},
                     {"max_modulus_deviation", num(mdev)},
                     {"f_decay_rate", num(w.f_decay_rate)},
                     {"u_synthesis", to_json(w.u_synthesis)},
                     {"f_synthesis", to_json(w.f_synthesis)}};
    if (!w.passed) {
        j["failing_mode"] = w.failing_mode;
        j["failure"] = w.failure;
    }
    return j;
}

nlohmann::json to_json(const GhExperiment& g) {
    nlohmann::json j;
    j["verdict"] = to_json(g.verdict);
    j["precondition"] = g.precondition;
    j["data_synthesis"] = to_json(g.data_synthesis);
    j["solution_regularity"] = to_json(g.solution_regularity);
    j["gain"] = g.gain;
    nlohmann::json d = nlohmann::json::array();
    for (double x : g.divisors) d.push_back(num(x));
    j["divisor_magnitudes"] = d;
    j["passed"] = g.passed;
    return j;
}

void write_witness_csv(std::ostream& os, const Counterexample& cx, std::size_t density) {
    os << "j,lambda,sup_u,abs_u_at_t_star,sup_f\n";
    for (std::size_t j = 1; j <= cx.u.size(); ++j) {
        os << j << ',' << shortest(cx.u.spectrum->lambda(j)) << ',' << shortest(sup_norm(cx.u.mode(j), density)) << ','
           << shortest(std::abs(cx.u.mode(j)(cx.t_star))) << ',' << shortest(sup_norm(cx.f.mode(j), density)) << '\n';
    }
}

}  // namespace ghlab
