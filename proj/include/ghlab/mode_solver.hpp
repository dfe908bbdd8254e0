#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ghlab/coefficient_field.hpp"
#include "ghlab/operator_spec.hpp"
#include "ghlab/spectral_models.hpp"
#include "ghlab/torus_fn.hpp"

namespace ghlab {

enum class Formula { Auto, Solu1, Solu2, Divisor };

enum class FormulaUsed { DivisorForm, Solu1, Solu2, GeneralWithFreeConstant };

const char* to_string(Formula f);
const char* to_string(FormulaUsed f);
Formula formula_from_string(const std::string& s);

struct SolverOptions {
    /// Initial Gauss panels for the integral formulas; doubled on probe points until stable.
    int panels = 16;
    int max_panels = 4096;
    double resonance_tol = 1e-10;
    /// Accepted residual is residual_tol * max(1, sup|f|).
    double residual_tol = 1e-8;
    double quad_tol = 1e-13;
    Formula formula = Formula::Auto;
    /// Output grid for the integral formulas; doubled until the spectral tail is negligible.
    std::size_t grid = 128;
    std::size_t max_grid = 4096;
    int max_order = 16;
};

struct ModeSolution {
    PeriodicFunction u;
    /// |tau + omega lambda| minimized over the data support (divisor form), or the
    /// magnitude of the small divisor of the integral formula; 0 when resonant.
    double divisor_magnitude = 0;
    bool resonant = false;
    FormulaUsed formula_used = FormulaUsed::DivisorForm;
    double residual_sup = 0;
    int panels_used = 0;
    double quadrature_change = 0;
};

/// { j : dist(lambda_j c0, Z) <= tol and |Im(lambda_j c0)| <= tol }, 1-based.
std::vector<std::size_t> resonant_set(const EigenvalueSequence& seq, cplx c0, double tol);

/// 1 - e^z without cancellation for small |z|.
cplx stable_one_minus_exp(cplx z);

/// Frequency-wise division u^(tau) = f^(tau) / (tau + omega lambda).
ModeSolution solve_constant_mode(double lambda, cplx omega, const PeriodicFunction& f,
                                 const SolverOptions& opts = {}, std::size_t j = 0);

/// Integral formulas for D_t u + lambda c(t) u = f. With opts.formula = Divisor and
/// constant c the divisor form is used instead.
ModeSolution solve_variable_mode(double lambda, const PeriodicFunction& c, const PeriodicFunction& f,
                                 const SolverOptions& opts = {}, std::size_t j = 0);

/// sup over a grid of |D_t u + lambda c u - f|, derivatives taken spectrally.
double mode_residual(double lambda, const PeriodicFunction& c, const PeriodicFunction& u,
                     const PeriodicFunction& f, std::size_t density = 1024);

struct FieldSolution {
    CoefficientField u;
    std::vector<ModeSolution> modes;  // diagnostics, modes[j-1]
};

/// Solves every mode j <= f.size(). Modes run concurrently when threads > 1;
/// failures are collected and rethrown as one FieldError.
FieldSolution solve_field(const OperatorSpec& op, const CoefficientField& f, const SolverOptions& opts = {},
                          unsigned threads = 0);

}  // namespace ghlab
