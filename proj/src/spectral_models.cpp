#include "ghlab/spectral_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "ghlab/errors.hpp"

namespace ghlab {

namespace {

// Lower exponent for the log branch is rho * (1 - kLogBranchSlack).
constexpr double kLogBranchSlack = 0.1;

bool sandwich_holds(double lambda, double j, const GrowthCertificate& c) {
    // Relative slack of a few ulps so that equality cases survive pow() rounding.
    constexpr double rel = 8 * std::numeric_limits<double>::epsilon();
    const double upper = c.K * std::pow(j, c.rho);
    const double lower = c.K_lower * std::pow(j, c.rho_lower);
    return lambda <= upper * (1 + rel) && lambda >= lower * (1 - rel);
}

}  // namespace

void WeylModel::validate() const {
    if (!(m > 0) || !(mu > 0) || d < 1 || !(scale > 0) || !std::isfinite(m) || !std::isfinite(mu) ||
        !std::isfinite(scale)) {
        throw Error(ErrorKind::InvalidModel,
                    "Weyl model requires m > 0, mu > 0, d >= 1, scale > 0 (got m=" + std::to_string(m) +
                        ", mu=" + std::to_string(mu) + ", d=" + std::to_string(d) +
                        ", scale=" + std::to_string(scale) + ")");
    }
}

double WeylModel::exponent() const {
    return log_branch() ? m / d : std::min(m, mu) / d;
}

double WeylModel::eigenvalue(double j) const {
    const double r = exponent();
    if (!log_branch()) return scale * std::pow(j, r);
    if (j < 2) return scale;
    return scale * std::pow(j / std::log(j), r);
}

EigenvalueSequence EigenvalueSequence::from_values(std::vector<double> values, std::size_t kernel_dim,
                                                   std::optional<GrowthCertificate> growth) {
    if (kernel_dim > values.size()) {
        throw Error(ErrorKind::InconsistentKernel, "kernel_dim " + std::to_string(kernel_dim) +
                                                       " exceeds sequence length " +
                                                       std::to_string(values.size()));
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = values[i];
        if (!std::isfinite(v) || v < 0) {
            throw Error(ErrorKind::InvalidModel, "eigenvalue " + std::to_string(i + 1) + " is not a finite nonnegative number");
        }
        if (i >= kernel_dim && !(v > 0)) {
            throw Error(ErrorKind::InvalidModel, "eigenvalue " + std::to_string(i + 1) + " must be positive outside the kernel");
        }
        if (i > 0 && v < values[i - 1]) {
            throw Error(ErrorKind::InvalidModel, "eigenvalues must be nondecreasing (index " + std::to_string(i + 1) + ")");
        }
    }
    EigenvalueSequence seq;
    seq.values_ = std::move(values);
    seq.kernel_dim_ = kernel_dim;
    if (growth) {
        const auto& g = *growth;
        if (!(g.K > 0 && g.rho > 0 && g.K_lower > 0 && g.rho_lower > 0)) {
            throw Error(ErrorKind::InvalidModel, "growth certificate constants must be positive");
        }
        // Kernel entries are zero and cannot satisfy a positive lower bound;
        // the certificate is stated for the tilde spectrum on those indices.
        for (std::size_t i = kernel_dim; i < seq.values_.size(); ++i) {
            if (!sandwich_holds(seq.values_[i], static_cast<double>(i + 1), g)) {
                throw Error(ErrorKind::InvalidModel,
                            "growth certificate violated at j=" + std::to_string(i + 1));
            }
        }
        seq.growth_ = g;
    }
    return seq;
}

EigenvalueSequence EigenvalueSequence::truncated(std::size_t n) const {
    if (n > values_.size()) {
        throw Error(ErrorKind::InvalidArgument, "cannot truncate a sequence of length " +
                                                    std::to_string(values_.size()) + " to " +
                                                    std::to_string(n));
    }
    EigenvalueSequence out = *this;
    out.values_.resize(n);
    out.kernel_dim_ = std::min(kernel_dim_, n);
    return out;
}

EigenvalueSequence generate_weyl(const WeylModel& model, std::size_t J) {
    model.validate();
    if (J < 1) throw Error(ErrorKind::InvalidModel, "generate_weyl requires J >= 1");

    EigenvalueSequence seq;
    seq.values_.reserve(J);
    for (std::size_t j = 1; j <= J; ++j) seq.values_.push_back(model.eigenvalue(static_cast<double>(j)));
    seq.model_ = model;

    const double r = model.exponent();
    if (!model.log_branch()) {
        seq.growth_ = GrowthCertificate{model.scale, r, model.scale, r};
    } else {
        // (j / log j) <= j / log 2 for j >= 2, and j^delta / log j >= e * delta.
        const double delta = kLogBranchSlack;
        seq.growth_ = GrowthCertificate{model.scale / std::pow(std::log(2.0), r), r,
                                        model.scale * std::pow(std::exp(1.0) * delta, r), r * (1 - delta)};
    }
    return seq;
}

EigenvalueSequence tilde(const EigenvalueSequence& seq) {
    if (seq.kernel_dim_ > seq.values_.size()) {
        throw Error(ErrorKind::InconsistentKernel, "kernel_dim exceeds sequence length");
    }
    EigenvalueSequence out = seq;
    std::fill_n(out.values_.begin(), seq.kernel_dim_, 1.0);
    return out;
}

std::size_t counting_function(const EigenvalueSequence& seq, double lambda) {
    const auto v = seq.values();
    return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [&](double x) { return x <= lambda; }));
}

GrowthReport verify_growth(const EigenvalueSequence& seq, double K, double rho, double K_lower,
                           double rho_lower) {
    return verify_growth(seq, GrowthCertificate{K, rho, K_lower, rho_lower});
}

GrowthReport verify_growth(const EigenvalueSequence& seq, const GrowthCertificate& cert) {
    GrowthReport report;
    const auto v = seq.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!sandwich_holds(v[i], static_cast<double>(i + 1), cert)) report.violations.push_back(i + 1);
    }
    report.holds = report.violations.empty();
    return report;
}

nlohmann::json to_json(const EigenvalueSequence& seq) {
    nlohmann::json j;
    j["values"] = std::vector<double>(seq.values().begin(), seq.values().end());
    j["kernel_dim"] = seq.kernel_dim();
    if (seq.growth()) {
        const auto& g = *seq.growth();
        j["growth"] = {{"K", g.K}, {"rho", g.rho}, {"K_lower", g.K_lower}, {"rho_lower", g.rho_lower}};
    } else {
        j["growth"] = nullptr;
    }
    if (seq.model()) {
        const auto& m = *seq.model();
        j["model"] = {{"m", m.m}, {"mu", m.mu}, {"d", m.d}, {"scale", m.scale}};
    }
    return j;
}

EigenvalueSequence sequence_from_json(const nlohmann::json& j) {
    if (j.contains("model") && j.at("model").is_object()) {
        const auto& m = j.at("model");
        WeylModel model{m.at("m").get<double>(), m.at("mu").get<double>(), m.at("d").get<int>(),
                        m.at("scale").get<double>()};
        return generate_weyl(model, j.at("values").size());
    }
    std::optional<GrowthCertificate> growth;
    if (j.contains("growth") && !j.at("growth").is_null()) {
        const auto& g = j.at("growth");
        growth = GrowthCertificate{g.at("K").get<double>(), g.at("rho").get<double>(),
                                   g.at("K_lower").get<double>(), g.at("rho_lower").get<double>()};
    }
    return EigenvalueSequence::from_values(j.at("values").get<std::vector<double>>(),
                                           j.value("kernel_dim", std::size_t{0}), growth);
}

void write_csv(std::ostream& os, const EigenvalueSequence& seq) {
    os << "j,lambda_j\n";
    const auto v = seq.values();
    const auto old = os.precision(17);
    for (std::size_t i = 0; i < v.size(); ++i) os << (i + 1) << ',' << v[i] << '\n';
    os.precision(old);
}

}  // namespace ghlab
