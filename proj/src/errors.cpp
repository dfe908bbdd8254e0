#include "ghlab/errors.hpp"

namespace ghlab {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidModel: return "invalid-model";
        case ErrorKind::InconsistentKernel: return "inconsistent-kernel";
        case ErrorKind::UnsupportedOrder: return "unsupported-order";
        case ErrorKind::InvalidSupport: return "invalid-support";
        case ErrorKind::InvalidArgument: return "invalid-argument";
        case ErrorKind::Resonance: return "resonance";
        case ErrorKind::Overflow: return "overflow";
        case ErrorKind::Numeric: return "numeric";
        case ErrorKind::Precision: return "precision";
        case ErrorKind::Verification: return "verification-failed";
        case ErrorKind::Usage: return "usage";
    }
    return "unknown";
}

}  // namespace ghlab
