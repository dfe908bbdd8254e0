#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "ghlab/errors.hpp"

namespace ghlab {

/// Weyl-type spectral model standing in for a concrete elliptic operator of
/// orders (m, mu) on a d-dimensional manifold.
///
/// Eigenvalues follow scale * j^{min(m,mu)/d} when m != mu and
/// scale * (j / log j)^{m/d} when m == mu (with lambda_1 = scale).
struct WeylModel {
    double m = 1.0;
    double mu = 1.0;
    int d = 1;
    double scale = 1.0;

    void validate() const;
    bool log_branch() const { return m == mu; }
    double exponent() const;
    /// Model value at a real index j >= 1.
    double eigenvalue(double j) const;
};

/// Polynomial sandwich K' j^{rho'} <= lambda_j <= K j^{rho}.
struct GrowthCertificate {
    double K = 1.0;
    double rho = 1.0;
    double K_lower = 1.0;
    double rho_lower = 1.0;
};

class EigenvalueSequence {
public:
    /// User-supplied spectrum. Values must be finite, nondecreasing, zero on
    /// the kernel and positive after it; a growth certificate, when given,
    /// must hold on every stored index.
    static EigenvalueSequence from_values(std::vector<double> values, std::size_t kernel_dim = 0,
                                          std::optional<GrowthCertificate> growth = std::nullopt);

    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    /// 1-based access, lambda_j.
    double lambda(std::size_t j) const { return values_.at(j - 1); }
    std::size_t kernel_dim() const noexcept { return kernel_dim_; }
    const std::optional<GrowthCertificate>& growth() const noexcept { return growth_; }
    /// The generating model, when the sequence came from generate_weyl.
    const std::optional<WeylModel>& model() const noexcept { return model_; }

    /// First n entries (n <= size()), keeping kernel, certificate and model.
    EigenvalueSequence truncated(std::size_t n) const;

    friend EigenvalueSequence generate_weyl(const WeylModel&, std::size_t);
    friend EigenvalueSequence tilde(const EigenvalueSequence&);

private:
    EigenvalueSequence() = default;

    std::vector<double> values_;
    std::size_t kernel_dim_ = 0;
    std::optional<GrowthCertificate> growth_;
    std::optional<WeylModel> model_;
};

EigenvalueSequence generate_weyl(const WeylModel& model, std::size_t J);

/// Kernel entries replaced by 1; everything else unchanged.
EigenvalueSequence tilde(const EigenvalueSequence& seq);

/// |{ j : lambda_j <= lambda }| over stored values.
std::size_t counting_function(const EigenvalueSequence& seq, double lambda);

struct GrowthReport {
    bool holds = true;
    std::vector<std::size_t> violations;  // 1-based indices
};

GrowthReport verify_growth(const EigenvalueSequence& seq, double K, double rho, double K_lower,
                           double rho_lower);
GrowthReport verify_growth(const EigenvalueSequence& seq, const GrowthCertificate& cert);

nlohmann::json to_json(const EigenvalueSequence& seq);
EigenvalueSequence sequence_from_json(const nlohmann::json& j);
/// Rows "j,lambda_j" with a header line.
void write_csv(std::ostream& os, const EigenvalueSequence& seq);

}  // namespace ghlab
