#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fpg {

enum class ErrorKind {
    ParameterDomain,
    DegenerateVertex,
    InsufficientTruncation,
    OutOfRange,
    UndefinedGibbs,
    Domain,
    InfiniteEntropy,
    Misuse,
    Stiffness,
    IntegrationInvariant,
    InsufficientData,
    Conditioning,
    Numerical,
    ClassViolation,
    Config,
    Budget,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so callers (and the CLI
/// exit-code mapping) can dispatch without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Integration failures keep the last accepted state for post-mortem output.
class IntegrationError : public Error {
public:
    IntegrationError(ErrorKind kind, const std::string& what, double t, std::vector<double> state)
        : Error(kind, what), t_(t), state_(std::move(state)) {}

    double time() const noexcept { return t_; }
    const std::vector<double>& state() const noexcept { return state_; }

private:
    double t_;
    std::vector<double> state_;
};

inline void require(bool cond, ErrorKind kind, const std::string& what) {
    if (!cond) throw Error(kind, what);
}

}  // namespace fpg
