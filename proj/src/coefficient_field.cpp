#include "ghlab/coefficient_field.hpp"

#include <string>

namespace ghlab {

void CoefficientField::validate() const {
    if (!spectrum) throw Error(ErrorKind::InvalidArgument, "coefficient field has no spectrum");
    if (modes.size() > spectrum->size()) {
        throw Error(ErrorKind::InvalidArgument, "coefficient field has " + std::to_string(modes.size()) +
                                                    " modes but the spectrum only " +
                                                    std::to_string(spectrum->size()));
    }
}

CoefficientField CoefficientField::generate(std::shared_ptr<const EigenvalueSequence> spectrum, std::size_t J,
                                            const std::function<PeriodicFunction(std::size_t, double)>& gen) {
    CoefficientField field;
    field.spectrum = std::move(spectrum);
    if (!field.spectrum || J > field.spectrum->size()) {
        throw Error(ErrorKind::InvalidArgument, "field truncation exceeds the spectrum length");
    }
    field.modes.reserve(J);
    for (std::size_t j = 1; j <= J; ++j) field.modes.push_back(gen(j, field.spectrum->lambda(j)));
    return field;
}

}  // namespace ghlab
