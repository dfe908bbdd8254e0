#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ghlab/coefficient_field.hpp"
#include "ghlab/diophantine.hpp"
#include "ghlab/mode_solver.hpp"
#include "ghlab/operator_spec.hpp"
#include "ghlab/regularity.hpp"

namespace ghlab {

struct SignOptions {
    std::size_t density = 4096;
    double zero_tol = 1e-9;        // relative to sup|b|
    double margin_floor = 0.05;    // required c*, c_*
    std::size_t plateau_min = 8;   // consecutive zero samples that count as a plateau
};

/// alpha < gamma < t < delta < beta, in the coordinates of the window (t0, t0 + 2 pi].
struct Partition {
    double alpha = 0, gamma = 0, t = 0, delta = 0, beta = 0;
    double margin = 0;             // c* (or c_*): the achieved strict bound
};

struct SignAnalysis {
    enum class Classification {
        PositiveOneSigned,
        NegativeOneSigned,
        ChangesSign,
        PlateauBetweenSignChange,
        IdenticallyZero,
    };
    Classification classification = Classification::IdenticallyZero;
    double b_min = 0, b_max = 0, b0 = 0;
    /// Zero runs of at least plateau_min samples, as [start, end] in [0, 2 pi).
    std::vector<std::pair<double, double>> plateaus;
    /// "b is not identically zero on any subinterval", on the grid.
    bool hypothesis_met = true;

    // Changes-sign data. found is false when t*, t_* or the partitions fail validation.
    bool found = false;
    double t_star = 0, t_lowstar = 0;          // unwrapped critical points
    double window_star = 0, window_lowstar = 0; // t0 of the window for each
    Partition upper, lower;                      // around t*, around t_*
    double c_star = 0, c_lowstar = 0;
    std::optional<double> theta, vartheta;       // negative-one-signed only
    std::string note;
};

const char* to_string(SignAnalysis::Classification c);

/// Sign classification of a real b on a uniform grid and, when b changes sign, the
/// critical points and partitions with B_{t*} <= 0 and B_{t_*} >= 0 over a window.
SignAnalysis analyze_sign(const PeriodicFunction& b, const SignOptions& opts = {});

struct VerdictOptions {
    std::size_t diophantine_J = 10000;   // capped by the spectrum length
    std::vector<double> epsilons = {0.5, 1, 2, 4};
    DiophantineOptions diophantine;
    SignOptions sign;
};

struct Verdict {
    enum class Result { GH, NotGH, Indeterminate };
    Result result = Result::Indeterminate;
    std::string theorem;
    bool truncated = false;              // GH resting on evidence up to J
    std::optional<DiophantineReport> diophantine;
    std::optional<SignAnalysis> sign;
    std::string note;
};

const char* to_string(Verdict::Result r);

Verdict verdict(const OperatorSpec& op, const VerdictOptions& opts = {});

struct CounterexampleOptions {
    std::size_t grid = 4096;
    int max_order = 16;
    SignOptions sign;
};

struct Counterexample {
    CoefficientField u, f;
    double t_star = 0;                   // in [0, 2 pi): |u_j(t_star)| = 1 for every j
    SignAnalysis sign;
};

/// u_j = g* exp[lambda_j psi* (B_{t*} - i A_{t*})], f_j = -i g*' exp[...], built in
/// log space from smooth cutoffs fitted to the partitions.
Counterexample build_counterexample(const OperatorSpec& op, std::size_t J, const CounterexampleOptions& opts = {});

struct WitnessOptions {
    double residual_tol = 1e-8;
    double modulus_tol = 1e-8;
    SynthesisOptions synthesis;
    std::size_t density = 8192;
};

struct WitnessCheck {
    std::vector<double> residuals;       // sup |D_t u_j + lambda_j c u_j - f_j|
    std::vector<double> moduli;          // |u_j(t_star)|
    std::vector<double> f_sup;           // sup |f_j|
    double f_decay_rate = 0;             // -slope of log sup|f_j| against lambda_j
    SynthesisVerdict u_synthesis, f_synthesis;
    bool residual_ok = false, modulus_ok = false, u_rejected = false, f_accepted = false;
    bool passed = false;
    std::size_t failing_mode = 0;
    std::string failure;
};

WitnessCheck check_counterexample(const CoefficientField& u, const CoefficientField& f, const OperatorSpec& op,
                                  double t_star, const WitnessOptions& opts = {});
/// As check_counterexample, raising a Verification error naming the failing mode and quantity.
WitnessCheck verify_counterexample(const CoefficientField& u, const CoefficientField& f, const OperatorSpec& op,
                                   double t_star, const WitnessOptions& opts = {});

struct GhExperimentOptions {
    int M_max = 6;
    int gamma_max = 8;
    SolverOptions solver;
    RegularityOptions regularity;
    SynthesisOptions synthesis;
    VerdictOptions verdict;
    unsigned threads = 0;
};

struct GhExperiment {
    Verdict verdict;
    SynthesisVerdict data_synthesis;
    bool precondition = false;           // GH verdict and data in the synthesis class
    FieldSolution solution;
    RegularityReport solution_regularity;
    std::vector<bool> gain;              // (**) at M + 1 for M = 0..M_max
    std::vector<double> divisors;        // per-mode divisor magnitudes
    bool passed = false;
};

GhExperiment gh_experiment(const OperatorSpec& op, const CoefficientField& f, const GhExperimentOptions& opts = {});

nlohmann::json to_json(const SignAnalysis& s);
nlohmann::json to_json(const Verdict& v);
nlohmann::json to_json(const WitnessCheck& w);
nlohmann::json to_json(const GhExperiment& g);
/// Per-mode rows: j, lambda, sup|u_j|, |u_j(t_star)|, sup|f_j|.
void write_witness_csv(std::ostream& os, const Counterexample& cx, std::size_t density = 4096);

}  // namespace ghlab
