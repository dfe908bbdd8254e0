#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ghlab {

enum class ErrorKind {
    InvalidModel,
    InconsistentKernel,
    UnsupportedOrder,
    InvalidSupport,
    InvalidArgument,
    Resonance,
    Overflow,
    Numeric,
    Precision,
    Verification,
    Usage,
};

const char* to_string(ErrorKind kind);

/// Base of every error raised by the library. The kind drives the CLI exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Exact (or within-tolerance) zero divisor with nonvanishing data at mode j, frequency tau.
class ResonanceError : public Error {
public:
    ResonanceError(std::size_t j, long long tau, const std::string& what)
        : Error(ErrorKind::Resonance, what), j_(j), tau_(tau) {}
    std::size_t mode() const noexcept { return j_; }
    long long frequency() const noexcept { return tau_; }

private:
    std::size_t j_;
    long long tau_;
};

class OverflowError : public Error {
public:
    OverflowError(double exponent, const std::string& what)
        : Error(ErrorKind::Overflow, what), exponent_(exponent) {}
    double exponent() const noexcept { return exponent_; }

private:
    double exponent_;
};

/// Non-finite integrand sample; carries the offending abscissa.
class NumericError : public Error {
public:
    NumericError(double abscissa, const std::string& what)
        : Error(ErrorKind::Numeric, what), abscissa_(abscissa) {}
    double abscissa() const noexcept { return abscissa_; }

private:
    double abscissa_;
};

class PrecisionError : public Error {
public:
    PrecisionError(unsigned required_digits, const std::string& what)
        : Error(ErrorKind::Precision, what), required_(required_digits) {}
    unsigned required_digits() const noexcept { return required_; }

private:
    unsigned required_;
};

/// Aggregated per-mode failures from a field solve.
class FieldError : public Error {
public:
    FieldError(ErrorKind kind, std::vector<std::size_t> failing, const std::string& what)
        : Error(kind, what), failing_(std::move(failing)) {}
    const std::vector<std::size_t>& failing_modes() const noexcept { return failing_; }

private:
    std::vector<std::size_t> failing_;
};

}  // namespace ghlab
