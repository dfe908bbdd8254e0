#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "ghlab/spectral_models.hpp"
#include "ghlab/torus_fn.hpp"

namespace ghlab {

/// Truncated eigen-expansion u = sum_{j <= J} u_j(t) phi_j. The eigenfunctions are
/// never materialized; only the time coefficients and the shared spectrum are kept.
struct CoefficientField {
    std::vector<PeriodicFunction> modes;  // modes[j-1] = u_j
    std::shared_ptr<const EigenvalueSequence> spectrum;

    std::size_t size() const noexcept { return modes.size(); }
    const PeriodicFunction& mode(std::size_t j) const { return modes.at(j - 1); }

    /// Throws InvalidArgument unless a spectrum is attached and covers every mode.
    void validate() const;

    /// Builds {gen(j, lambda_j)}_{j <= J}.
    static CoefficientField generate(std::shared_ptr<const EigenvalueSequence> spectrum, std::size_t J,
                                     const std::function<PeriodicFunction(std::size_t, double)>& gen);
};

}  // namespace ghlab
