#include "ghlab/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <Eigen/Dense>

#include "ghlab/errors.hpp"
#include "ghlab/format.hpp"

namespace ghlab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double lambda_tilde(const EigenvalueSequence& seq, std::size_t j) {
    const double l = seq.lambda(j);
    return l == 0 ? 1.0 : l;
}

std::size_t head_size(std::size_t J) { return std::max<std::size_t>(1, J / 2); }

std::size_t sup_grid(const CoefficientField& field, std::size_t density) {
    std::size_t n = std::max<std::size_t>(density, 16);
    for (const auto& m : field.modes) n = std::max(n, 2 * m.grid_size());
    return n;
}

void check_field(const CoefficientField& field, int gamma_max) {
    field.validate();
    if (field.size() == 0) throw Error(ErrorKind::InvalidArgument, "field has no modes");
    if (gamma_max < 0) throw Error(ErrorKind::InvalidArgument, "gamma_max must be nonnegative");
    for (std::size_t j = 1; j <= field.size(); ++j) {
        const auto& m = field.mode(j);
        if (m.max_order() >= 0 && gamma_max > m.max_order())
            throw Error(ErrorKind::UnsupportedOrder, "derivative order " + std::to_string(gamma_max) +
                                                         " exceeds the supported order of mode " + std::to_string(j));
    }
}

}  // namespace

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = std::min(x.size(), y.size());
    if (n < 2) return 0;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    return sxx > 0 ? sxy / sxx : 0;
}

double sk_norm(std::span<const cplx> u, double r, const EigenvalueSequence& seq) {
    if (u.size() > seq.size())
        throw Error(ErrorKind::InvalidArgument, "coefficient vector is longer than the spectrum");
    double s = 0;
    for (std::size_t j = 1; j <= u.size(); ++j) {
        const double a = std::abs(u[j - 1]);
        if (a == 0) continue;
        s += a * a * std::pow(lambda_tilde(seq, j), 2 * r);
    }
    return std::sqrt(s);
}

GevreyFit fit_gevrey_envelope(const std::vector<int>& gammas, const std::vector<double>& q) {
    GevreyFit fit;
    const std::size_t n = std::min(gammas.size(), q.size());
    if (n == 0) return fit;
    // q ~ c + a (gamma+1) + sigma lgamma(gamma+1); the free constant absorbs prefactors
    // that C^{gamma+1} swallows anyway.
    double sigma = 1;
    if (n >= 2) {
        const bool full = n >= 3;
        Eigen::MatrixXd A(n, full ? 3 : 2);
        Eigen::VectorXd y(n);
        for (std::size_t r = 0; r < n; ++r) {
            const double g = gammas[r];
            A(r, 0) = g + 1;
            A(r, 1) = std::lgamma(g + 1);
            if (full) A(r, 2) = 1;
            y(r) = q[r];
        }
        const Eigen::VectorXd x = A.colPivHouseholderQr().solve(y);
        if (std::isfinite(x(1)) && A.col(1).cwiseAbs().maxCoeff() > 0) sigma = x(1);
        fit.residual = std::sqrt((A * x - y).squaredNorm() / static_cast<double>(n));
    }
    fit.sigma = std::max(1.0, sigma);
    fit.log_C = kNegInf;
    for (std::size_t i = 0; i < n; ++i) {
        const double g = gammas[i];
        fit.log_C = std::max(fit.log_C, (q[i] - fit.sigma * std::lgamma(g + 1)) / (g + 1));
    }
    return fit;
}

std::vector<std::vector<double>> derivative_sups(const CoefficientField& field, int gamma_max, std::size_t density) {
    check_field(field, gamma_max);
    const std::size_t n = sup_grid(field, density);
    std::vector<std::vector<double>> out(field.size(), std::vector<double>(gamma_max + 1, 0.0));
    for (std::size_t j = 1; j <= field.size(); ++j) {
        for (int g = 0; g <= gamma_max; ++g) out[j - 1][g] = sup_norm(derivative(field.mode(j), g), n);
    }
    return out;
}

StarResult condition_star(const CoefficientField& field, int M, int gamma_max, const RegularityOptions& opts) {
    check_field(field, gamma_max);
    const auto& seq = *field.spectrum;
    const std::size_t J = field.size(), head = head_size(J);
    const std::size_t n = sup_grid(field, opts.density);
    StarResult r;
    r.M = M;
    r.gamma_max = gamma_max;
    r.S.assign(gamma_max + 1, 0.0);
    r.S_half.assign(gamma_max + 1, 0.0);
    for (int g = 0; g <= gamma_max; ++g) {
        std::vector<double> acc(n, 0.0), acc_half(n, 0.0);
        for (std::size_t j = 1; j <= J; ++j) {
            const auto d = derivative(field.mode(j), g);
            if (d.is_zero()) continue;
            const double w = std::pow(lambda_tilde(seq, j), 2.0 * M);
            const auto vals = d.values_on_grid(n);
            for (std::size_t k = 0; k < n; ++k) {
                const double a = std::norm(vals[k]) * w;
                acc[k] += a;
                if (j <= head) acc_half[k] += a;
            }
        }
        r.S[g] = *std::max_element(acc.begin(), acc.end());
        r.S_half[g] = *std::max_element(acc_half.begin(), acc_half.end());
        if (!std::isfinite(r.S[g])) {
            r.failure = "partial sum S_" + std::to_string(g) + " is not finite";
            return r;
        }
        if (J >= 2 && r.S[g] > (1 + opts.band) * r.S_half[g]) {
            r.failure = "divergence trend: S_" + std::to_string(g) + "(J) = " + shortest(r.S[g]) +
                        " exceeds S_" + std::to_string(g) + "(J/2) = " + shortest(r.S_half[g]) + " by more than the band";
        }
    }
    std::vector<int> gs;
    std::vector<double> q;
    for (int g = 0; g <= gamma_max; ++g) {
        if (r.S[g] > 0) {
            gs.push_back(g);
            q.push_back(0.5 * std::log(r.S[g]));
        }
    }
    r.fit = fit_gevrey_envelope(gs, q);
    if (!r.failure.empty()) return r;
    if (r.fit.sigma > opts.sigma_max) {
        r.failure = "super-factorial growth: fitted sigma " + shortest(r.fit.sigma);
        return r;
    }
    r.passed = true;
    return r;
}

StarStarResult condition_star_star(const CoefficientField& field, int M, int gamma_max, const RegularityOptions& opts) {
    const auto sups = derivative_sups(field, gamma_max, opts.density);
    const auto& seq = *field.spectrum;
    const std::size_t J = field.size(), head = head_size(J);
    StarStarResult r;
    r.M = M;
    r.gamma_max = gamma_max;
    auto L = [&](std::size_t j, int g) {
        const double s = sups[j - 1][g];
        return s > 0 ? std::log(s) + M * std::log(lambda_tilde(seq, j)) : kNegInf;
    };
    std::vector<int> gs;
    std::vector<double> q;
    for (int g = 0; g <= gamma_max; ++g) {
        double best = kNegInf;
        for (std::size_t j = 1; j <= head; ++j) best = std::max(best, L(j, g));
        if (best > kNegInf) {
            gs.push_back(g);
            q.push_back(best);
        }
    }
    r.fit = fit_gevrey_envelope(gs, q);
    const double slack = std::log1p(opts.band);
    for (std::size_t j = head + 1; j <= J; ++j) {
        for (int g = 0; g <= gamma_max; ++g) {
            const double l = L(j, g);
            if (l == kNegInf) continue;
            const double bound = (g + 1) * r.fit.log_C + r.fit.sigma * std::lgamma(g + 1.0);
            if (!(l <= bound + slack)) {
                r.fail_j = j;
                r.fail_gamma = g;
                r.failure = "tail violation at j = " + std::to_string(j) + ", gamma = " + std::to_string(g);
                return r;
            }
        }
    }
    if (r.fit.sigma > opts.sigma_max) {
        r.failure = "super-factorial growth: fitted sigma " + shortest(r.fit.sigma);
        return r;
    }
    r.passed = true;
    return r;
}

SeminormDecay seminorm_decay(const CoefficientField& field, double sigma, double eta, int M, int gamma_max,
                             const RegularityOptions& opts) {
    check_field(field, gamma_max);
    const auto& seq = *field.spectrum;
    const std::size_t J = field.size(), head = head_size(J);
    const std::size_t n = sup_grid(field, opts.density);
    SeminormDecay d;
    d.norms.resize(J);
    std::vector<double> scaled(J);
    for (std::size_t j = 1; j <= J; ++j) {
        d.norms[j - 1] = gevrey_norm(field.mode(j), sigma, eta, gamma_max, n).value;
        scaled[j - 1] = d.norms[j - 1] * std::pow(lambda_tilde(seq, j), M);
    }
    d.constant = *std::max_element(scaled.begin(), scaled.begin() + head);
    d.passed.assign(J, true);
    d.all_passed = true;
    for (std::size_t j = head + 1; j <= J; ++j) {
        if (!(scaled[j - 1] <= d.constant * (1 + opts.band))) {
            d.passed[j - 1] = false;
            d.all_passed = false;
        }
    }
    return d;
}

SynthesisVerdict synthesis_membership_from_norms(const std::vector<double>& norms, const SynthesisOptions& opts) {
    SynthesisVerdict v;
    v.norms = norms;
    const std::size_t J = norms.size();
    if (std::all_of(norms.begin(), norms.end(), [](double x) { return x == 0; })) {
        v.member = v.vacuous = true;
        v.max_passed_Mprime = opts.Mprime_max;
        v.slope = kNegInf;
        return v;
    }
    std::vector<double> x, y;
    for (std::size_t j = head_size(J) + 1; j <= J; ++j) {
        if (norms[j - 1] > 0) {
            x.push_back(std::log(static_cast<double>(j)));
            y.push_back(std::log(norms[j - 1]));
        }
    }
    if (x.empty() && J >= 2) {
        v.slope = kNegInf;
    } else if (x.size() < 2) {
        v.slope = 0;
    } else {
        v.slope = ls_slope(x, y);
    }
    int passed = 0;
    while (passed < opts.Mprime_max && v.slope <= -(passed + 1) + opts.slope_slack) ++passed;
    v.max_passed_Mprime = passed;
    v.member = passed >= opts.Mprime_max;
    if (!v.member) v.rejected_at = passed + 1;
    return v;
}

SynthesisVerdict synthesis_membership(const CoefficientField& field, const SynthesisOptions& opts) {
    check_field(field, opts.gamma_max);
    const std::size_t n = sup_grid(field, opts.density);
    std::vector<double> norms(field.size());
    for (std::size_t j = 1; j <= field.size(); ++j)
        norms[j - 1] = gevrey_norm(field.mode(j), opts.sigma, opts.eta, opts.gamma_max, n).value;
    return synthesis_membership_from_norms(norms, opts);
}

DistributionOrder distribution_order_fit(const std::vector<double>& norms, const EigenvalueSequence& seq) {
    if (norms.size() > seq.size()) throw Error(ErrorKind::InvalidArgument, "more norms than eigenvalues");
    if (norms.empty()) throw Error(ErrorKind::InvalidArgument, "no norms to fit");
    for (double v : norms) {
        if (!(v >= 0) || !std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "norms must be finite and nonnegative");
    }
    const std::size_t J = norms.size(), head = head_size(J);
    auto tail_slope = [&](std::size_t from, std::size_t to) {
        std::vector<double> x, y;
        for (std::size_t j = from; j <= to; ++j) {
            if (norms[j - 1] > 0) {
                x.push_back(std::log(lambda_tilde(seq, j)));
                y.push_back(std::log(norms[j - 1]));
            }
        }
        return ls_slope(x, y);
    };
    DistributionOrder d;
    d.slope = tail_slope(head + 1 <= J ? head + 1 : 1, J);
    const std::size_t q3 = head + (J - head) / 2;
    if (J - head >= 8) {
        const double early = tail_slope(head + 1, q3), late = tail_slope(q3 + 1, J);
        d.unbounded = late > early + 0.5;
        if (d.unbounded) d.slope = late;
    }
    d.M = std::max(0, static_cast<int>(std::ceil(d.slope - 1e-6)));
    double logB = kNegInf;
    for (std::size_t j = 1; j <= J; ++j) {
        if (norms[j - 1] > 0) logB = std::max(logB, std::log(norms[j - 1]) - d.M * std::log(lambda_tilde(seq, j)));
    }
    d.B = std::exp(logB);
    return d;
}

RegularityReport classify_field(const CoefficientField& field, int M_max, int gamma_max, const RegularityOptions& opts) {
    if (M_max < 0) throw Error(ErrorKind::InvalidArgument, "M_max must be nonnegative");
    RegularityReport rep;
    rep.J = field.size();
    rep.M_max = M_max;
    rep.gamma_max = gamma_max;
    std::string rejected;
    for (int M = 0; M <= M_max; ++M) {
        rep.per_M.push_back(condition_star_star(field, M, gamma_max, opts));
        rep.star.push_back(condition_star(field, M, gamma_max, opts));
        const auto& ss = rep.per_M.back();
        if (rejected.empty()) {
            if (ss.passed) {
                rep.max_verified_M = M;
            } else {
                rejected = "rejected-at-(" + std::to_string(M) + "," + std::to_string(ss.fail_j) + "," +
                           std::to_string(ss.fail_gamma) + ")";
            }
        }
    }
    rep.member = rejected.empty();
    rep.verdict = rep.member ? "member-of-F-up-to-(" + std::to_string(rep.J) + "," + std::to_string(M_max) + "," +
                                   std::to_string(gamma_max) + ")"
                             : rejected;
    return rep;
}

namespace {

nlohmann::json num(double x) {
    if (!std::isfinite(x)) return nullptr;
    return x;
}

nlohmann::json fit_json(const GevreyFit& f) {
    return {{"sigma", num(f.sigma)}, {"log_C", num(f.log_C)}, {"C", num(std::exp(f.log_C))}, {"residual", num(f.residual)}};
}

}  // namespace

nlohmann::json to_json(const RegularityReport& r) {
    nlohmann::json j;
    j["J"] = r.J;
    j["M_max"] = r.M_max;
    j["gamma_max"] = r.gamma_max;
    j["verdict"] = r.verdict;
    j["member"] = r.member;
    j["max_verified_M"] = r.max_verified_M;
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t i = 0; i < r.per_M.size(); ++i) {
        const auto& ss = r.per_M[i];
        const auto& st = r.star[i];
        nlohmann::json e;
        e["M"] = ss.M;
        e["star_star"] = {{"passed", ss.passed}, {"fit", fit_json(ss.fit)}, {"failure", ss.failure}};
        if (!ss.passed && ss.fail_gamma >= 0) {
            e["star_star"]["fail_j"] = ss.fail_j;
            e["star_star"]["fail_gamma"] = ss.fail_gamma;
        }
        nlohmann::json S = nlohmann::json::array();
        for (double s : st.S) S.push_back(num(s));
        e["star"] = {{"passed", st.passed}, {"fit", fit_json(st.fit)}, {"S", S}, {"failure", st.failure}};
        arr.push_back(e);
    }
    j["per_M"] = arr;
    return j;
}

nlohmann::json to_json(const SynthesisVerdict& v) {
    nlohmann::json j{{"member", v.member},
                     {"vacuous", v.vacuous},
                     {"slope", num(v.slope)},
                     {"max_passed_Mprime", v.max_passed_Mprime}};
    if (v.rejected_at >= 0) j["rejected_at_Mprime"] = v.rejected_at;
    return j;
}

nlohmann::json to_json(const DistributionOrder& d) {
    return {{"M", d.M}, {"B", num(d.B)}, {"slope", num(d.slope)}, {"unbounded", d.unbounded}};
}

void write_decay_csv(std::ostream& os, const CoefficientField& field, const StarStarResult& fit, std::size_t density) {
    const auto sups = derivative_sups(field, 0, density);
    os << "j,sup_u,bound\n";
    for (std::size_t j = 1; j <= field.size(); ++j) {
        const double bound = std::exp(fit.fit.log_C - fit.M * std::log(lambda_tilde(*field.spectrum, j)));
        os << j << ',' << shortest(sups[j - 1][0]) << ',' << shortest(bound) << '\n';
    }
}

}  // namespace ghlab
