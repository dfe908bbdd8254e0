#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ghlab/coefficient_field.hpp"

namespace ghlab {

/// Shared knobs of the coefficient-decay classifiers. Every verdict is "up to
/// (J, M, gamma_max)": the head j <= J/2 fixes the constants, the tail is tested.
struct RegularityOptions {
    std::size_t density = 1024;   // sup-norm grid (at least twice any sample grid)
    double band = 0.10;           // relative slack allowed in the tail
    double sigma_max = 8.0;       // fitted sigma above this counts as super-factorial
};

/// (sum_j |u_j|^2 lambda~_j^{2r})^{1/2}
double sk_norm(std::span<const cplx> u, double r, const EigenvalueSequence& seq);

/// Least-squares fit of q_gamma <= (gamma+1) log C + sigma log gamma! with sigma >= 1,
/// followed by raising log C to the envelope of the data.
struct GevreyFit {
    double sigma = 1;
    double log_C = 0;
    double residual = 0;          // rms residual of the unconstrained regression
};

GevreyFit fit_gevrey_envelope(const std::vector<int>& gammas, const std::vector<double>& q);

struct StarResult {
    bool passed = false;
    int M = 0;
    int gamma_max = 0;
    GevreyFit fit;
    std::vector<double> S;        // S_gamma over all j <= J
    std::vector<double> S_half;   // S_gamma over j <= J/2
    std::string failure;          // empty when passed
};

/// Condition (*): S_gamma = sup_t sum_j lambda~_j^{2M} |d^gamma u_j|^2, fitted against
/// C^{2(gamma+1)} (gamma!)^{2 sigma}. Fails when a partial sum is still growing between
/// J/2 and J, or when no factorial-order fit exists.
StarResult condition_star(const CoefficientField& field, int M, int gamma_max, const RegularityOptions& opts = {});

struct StarStarResult {
    bool passed = false;
    int M = 0;
    int gamma_max = 0;
    GevreyFit fit;
    std::size_t fail_j = 0;       // first violating (j, gamma) when failed
    int fail_gamma = -1;
    std::string failure;
};

/// Condition (**): sup_t |d^gamma u_j| <= C^{gamma+1} (gamma!)^sigma lambda~_j^{-M}.
StarStarResult condition_star_star(const CoefficientField& field, int M, int gamma_max,
                                   const RegularityOptions& opts = {});

/// sup_t |d^gamma u_j| for j = 1..J, gamma = 0..gamma_max.
std::vector<std::vector<double>> derivative_sups(const CoefficientField& field, int gamma_max,
                                                 std::size_t density);

struct SeminormDecay {
    std::vector<double> norms;    // Gevrey norms of u_j
    std::vector<bool> passed;     // per j
    double constant = 0;          // fitted on the head
    bool all_passed = false;
};

/// ||u_j||_{G^{sigma, eta}} <= K lambda~_j^{-M}, K fitted on the head.
SeminormDecay seminorm_decay(const CoefficientField& field, double sigma, double eta, int M, int gamma_max,
                             const RegularityOptions& opts = {});

struct SynthesisOptions {
    double sigma = 2.0;
    double eta = 50.0;
    int gamma_max = 4;
    int Mprime_max = 4;
    double slope_slack = 0.05;
    std::size_t density = 1024;
};

struct SynthesisVerdict {
    bool member = false;
    bool vacuous = false;
    double slope = 0;             // tail slope of log ||u_j|| against log j
    int max_passed_Mprime = 0;
    int rejected_at = -1;         // first failing M' when rejected
    std::vector<double> norms;
};

/// ||u_j||_{G^{sigma,eta}} <= B j^{-M'} for every M' <= Mprime_max, by tail slope.
SynthesisVerdict synthesis_membership(const CoefficientField& field, const SynthesisOptions& opts = {});
SynthesisVerdict synthesis_membership_from_norms(const std::vector<double>& norms, const SynthesisOptions& opts = {});

struct DistributionOrder {
    int M = 0;
    double B = 0;
    double slope = 0;
    bool unbounded = false;       // the tail slope is still increasing
};

/// Smallest integer M with norms_j / lambda~_j^M bounded on the stored range, read
/// from the tail slope; B is the resulting supremum.
DistributionOrder distribution_order_fit(const std::vector<double>& norms, const EigenvalueSequence& seq);

struct RegularityReport {
    std::size_t J = 0;
    int M_max = 0;
    int gamma_max = 0;
    std::vector<StarStarResult> per_M;
    std::vector<StarResult> star;
    int max_verified_M = -1;
    bool member = false;
    std::string verdict;
};

/// Runs (**) and (*) for M = 0..M_max. The verdict follows the pointwise test (**);
/// the summed test (*) is reported alongside.
RegularityReport classify_field(const CoefficientField& field, int M_max, int gamma_max,
                                const RegularityOptions& opts = {});

nlohmann::json to_json(const RegularityReport& r);
nlohmann::json to_json(const SynthesisVerdict& v);
nlohmann::json to_json(const DistributionOrder& d);
/// Rows j, sup|u_j|, fitted (**) bound at gamma = 0 for the given result.
void write_decay_csv(std::ostream& os, const CoefficientField& field, const StarStarResult& fit,
                     std::size_t density = 1024);

/// Least-squares slope of y against x.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace ghlab
