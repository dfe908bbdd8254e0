#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/gmp.hpp>
#include <boost/multiprecision/mpfr.hpp>
#include <json.hpp>

#include "ghlab/spectral_models.hpp"

namespace ghlab {

using mpz = boost::multiprecision::mpz_int;
using mpfr = boost::multiprecision::mpfr_float;

/// Sets the MPFR default precision (decimal digits) for its lifetime. The Boost
/// default is process-wide, so scopes are serialized by a global lock.
class PrecisionScope {
public:
    explicit PrecisionScope(unsigned digits);
    ~PrecisionScope();
    PrecisionScope(const PrecisionScope&) = delete;
    PrecisionScope& operator=(const PrecisionScope&) = delete;

private:
    unsigned saved_;
};

/// A real parameter alpha kept exactly where possible.
///
/// Accepted forms: "p/q", decimals ("0.125", "-3"), "sqrtN" or "sqrt(N)" for a
/// nonnegative integer N, and "liouville:K" for sum_{k<=K} 10^{-k!}.
class Alpha {
public:
    static Alpha parse(const std::string& expr);
    /// Shortest decimal that round-trips the double, taken as an exact rational.
    static Alpha from_double(double x);
    static Alpha rational(mpz num, mpz den);

    const std::string& expr() const noexcept { return expr_; }
    bool is_rational() const noexcept { return !radicand_; }
    const mpz& numerator() const { return num_; }
    const mpz& denominator() const { return den_; }
    const std::optional<mpz>& radicand() const noexcept { return radicand_; }
    /// Value at the current MPFR default precision.
    mpfr value() const;
    double approx() const;

private:
    std::string expr_;
    mpz num_{0}, den_{1};
    std::optional<mpz> radicand_;  // alpha = sqrt(radicand)
};

struct NearestGap {
    long long tau = 0;
    double gap = 0;
};

/// tau = round(alpha lambda), gap = |tau - alpha lambda| in double precision.
NearestGap nearest_integer_gap(double alpha, double lambda);

/// Extended-precision gap. tau is returned in decimal; log10_gap is -inf for an exact zero.
struct ExactGap {
    std::string j;
    std::string tau;
    double gap = 0;                 // 0 when below double range
    double log10_gap = 0;
    bool exact = false;             // computed in integer arithmetic
    bool zero = false;
};

ExactGap nearest_integer_gap(const Alpha& alpha, const mpz& lambda_integer);
/// Non-integral lambda in MPFR at the given precision.
ExactGap nearest_integer_gap(const Alpha& alpha, const mpfr& lambda, unsigned digits);

struct EpsilonFit {
    double epsilon = 1;
    double C = 0;                   // inf_{j <= J} j^eps gap_j
    std::size_t argmin_j = 0;
    std::vector<std::pair<std::size_t, double>> checkpoints;  // (J', C at J')
    double trend_slope = 0;         // d log C / d log J' over the checkpoints
    /// min over probe indices of log10(j^eps gap_j); +inf without probes.
    double probe_log10_min = std::numeric_limits<double>::infinity();
    std::string probe_argmin;
    bool holds = false;             // C >= floor and the trend is flat
};

struct DiophantineOptions {
    unsigned digits = 0;            // 0: chosen from lambda_J and the probes
    double collapse_floor = 1e-3;
    double flat_slope = -0.1;       // trend slopes above this count as bounded
    /// Indices beyond J evaluated through the spectrum's model, as decimal strings.
    /// Left empty, Liouville parameters contribute their certificate indices.
    std::vector<std::string> probes;
    bool auto_probes = true;
    std::size_t first_checkpoint = 16;
};

struct DiophantineReport {
    std::string alpha;
    std::size_t J = 0;
    unsigned digits = 0;
    std::vector<double> epsilons;
    std::vector<ExactGap> gaps;     // j = 1..J
    std::vector<ExactGap> probe_gaps;
    std::vector<EpsilonFit> fits;
    enum class Verdict { HoldsUpToJ, FailsEvidence } verdict = Verdict::HoldsUpToJ;
    double held_epsilon = 0;        // holds: (epsilon, C) reported
    double held_C = 0;
    std::vector<std::string> witness;  // fails: indices carrying the evidence
    std::string reason;
};

const char* to_string(DiophantineReport::Verdict v);

DiophantineReport check_condition_A(const Alpha& alpha, const EigenvalueSequence& seq, std::size_t J,
                                    std::vector<double> epsilons = {0.5, 1, 2, 4},
                                    const DiophantineOptions& opts = {});

struct LiouvilleEntry {
    int k = 0;
    std::string j;          // 10^{k!}
    std::string tau;
    double log10_gap = 0;   // -inf at the last depth (exact zero)
    double log10_bound = 0; // log10(2) + k! - (k+1)!
    bool holds = false;
};

struct LiouvilleCertificate {
    int K = 0;
    Alpha alpha;
    std::string alpha_decimal;
    unsigned required_digits = 0;
    std::vector<LiouvilleEntry> entries;
};

/// alpha = sum_{k<=K} 10^{-k!} with the certificate along j_k = 10^{k!}. digits = 0
/// means "as many as needed"; fewer than required raises PrecisionError.
LiouvilleCertificate construct_liouville(int K, unsigned digits = 0);
unsigned liouville_required_digits(int K);

nlohmann::json to_json(const DiophantineReport& r);
nlohmann::json to_json(const LiouvilleCertificate& c);
void write_gaps_csv(std::ostream& os, const DiophantineReport& r);

}  // namespace ghlab
