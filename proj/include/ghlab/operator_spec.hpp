#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>

#include "ghlab/spectral_models.hpp"
#include "ghlab/torus_fn.hpp"

namespace ghlab {

/// D_t + omega P with omega = alpha + i beta.
struct ConstantCoefficient {
    cplx omega;
    /// Exact description of alpha (e.g. "sqrt2", "3/7", "liouville:4") for
    /// extended-precision Diophantine checks; empty means use omega.real().
    std::string alpha_expr;
};

/// D_t + c(t) P with c = a + i b.
struct VariableCoefficient {
    PeriodicFunction c;
};

class OperatorSpec {
public:
    OperatorSpec(cplx omega, std::shared_ptr<const EigenvalueSequence> spectrum, std::string alpha_expr = {});
    OperatorSpec(PeriodicFunction c, std::shared_ptr<const EigenvalueSequence> spectrum);

    bool is_constant() const noexcept { return std::holds_alternative<ConstantCoefficient>(coefficient_); }
    const ConstantCoefficient& constant() const { return std::get<ConstantCoefficient>(coefficient_); }
    const VariableCoefficient& variable() const { return std::get<VariableCoefficient>(coefficient_); }
    const std::shared_ptr<const EigenvalueSequence>& spectrum() const noexcept { return spectrum_; }

    /// The coefficient as a function of t (constant for D_t + omega P).
    const PeriodicFunction& coefficient_function() const noexcept { return c_; }
    /// c_0 = a_0 + i b_0, the mean of the coefficient, computed once.
    cplx mean_coefficient() const noexcept { return c0_; }
    const PeriodicFunction& real_part() const noexcept { return a_; }
    const PeriodicFunction& imag_part() const noexcept { return b_; }

private:
    std::variant<ConstantCoefficient, VariableCoefficient> coefficient_;
    std::shared_ptr<const EigenvalueSequence> spectrum_;
    PeriodicFunction c_, a_, b_;
    cplx c0_{};
};

}  // namespace ghlab
