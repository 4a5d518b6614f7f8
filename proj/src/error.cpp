#include "fpg/error.hpp"

namespace fpg {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::ParameterDomain: return "parameter-domain";
        case ErrorKind::DegenerateVertex: return "degenerate-vertex";
        case ErrorKind::InsufficientTruncation: return "insufficient-truncation";
        case ErrorKind::OutOfRange: return "out-of-range";
        case ErrorKind::UndefinedGibbs: return "undefined-gibbs";
        case ErrorKind::Domain: return "domain";
        case ErrorKind::InfiniteEntropy: return "infinite-entropy";
        case ErrorKind::Misuse: return "misuse";
        case ErrorKind::Stiffness: return "stiffness";
        case ErrorKind::IntegrationInvariant: return "integration-invariant";
        case ErrorKind::InsufficientData: return "insufficient-data";
        case ErrorKind::Conditioning: return "conditioning";
        case ErrorKind::Numerical: return "numerical";
        case ErrorKind::ClassViolation: return "class-violation";
        case ErrorKind::Config: return "config";
        case ErrorKind::Budget: return "budget";
    }
    return "unknown";
}

}  // namespace fpg
