#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "ghlab/coefficient_field.hpp"
#include "ghlab/errors.hpp"
#include "ghlab/operator_spec.hpp"
#include "ghlab/spectral_models.hpp"
#include "ghlab/torus_fn.hpp"

namespace ghlab::cli {

/// Schema violation; pointer() is the JSON pointer of the offending key.
class ConfigError : public Error {
public:
    ConfigError(std::string pointer, const std::string& what)
        : Error(ErrorKind::Usage, pointer + ": " + what), pointer_(std::move(pointer)) {}
    const std::string& pointer() const noexcept { return pointer_; }

private:
    std::string pointer_;
};

inline const std::vector<std::string> kCommands = {"spectrum", "solve",          "verdict", "diophantine",
                                                   "classify", "counterexample", "ghx"};

struct Truncation {
    std::size_t J = 0;
    int M_max = 4;
    int gamma_max = 6;
};

struct Numeric {
    int panels = 16;
    double residual_tol = 1e-8;
    double resonance_tol = 1e-10;
    unsigned digits = 0;              // extended precision; 0 picks automatically
    std::size_t density = 1024;
    std::vector<double> epsilons = {0.5, 1, 2, 4};
    unsigned threads = 0;
};

struct DataSpec {
    std::string generator;            // empty: no data section
    double rate = 1;
    double power = 3;
    int freq = 1;
    PeriodicFunction profile = PeriodicFunction::constant(1.0);
};

/// Validated view of a config document. raw keeps the normalized document the
/// hash is taken from.
struct ExperimentConfig {
    nlohmann::json raw;
    std::string command;              // may be empty unless `run` is used
    std::shared_ptr<const EigenvalueSequence> spectrum;
    std::unique_ptr<OperatorSpec> op; // absent without an operator section
    DataSpec data;
    Truncation truncation;
    Numeric numeric;
    std::string classify_target = "data";
    std::filesystem::path out_dir = "out";
};

/// Parses a function literal: a number, {"re", "im"}, or a list of terms
/// {"type": "const" | "cos" | "sin" | "exp", "freq", "amp" | "re"/"im"}.
PeriodicFunction function_literal(const nlohmann::json& j, const std::string& pointer);

/// Applies "a.b.c=value"; value is read as JSON when it parses, otherwise as a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides,
                             const std::string& out_dir = {}, int precision = -1);

/// SHA-256 of the compact dump of the document without its outputs section.
std::string config_hash(const nlohmann::json& doc);

/// The data field {f_j}_{j <= J} described by the data section.
CoefficientField make_data(const ExperimentConfig& cfg);

enum ExitCode : int { kOk = 0, kUsage = 2, kNumeric = 3, kVerification = 4 };

int exit_code_for(ErrorKind kind);

struct RunResult {
    int exit_code = kOk;
    nlohmann::json report;
    std::vector<std::filesystem::path> artifacts;
};

/// Executes one command and writes <out>/<command>.json plus CSV series. Engine errors
/// become an error report at <out>/error.json and a nonzero exit code.
RunResult run(const std::string& command, const ExperimentConfig& cfg);

}  // namespace ghlab::cli
