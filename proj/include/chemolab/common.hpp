// Error types and small shared utilities.
#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace chemolab {

/// Invalid configuration or precondition violation in user-facing input.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Bad argument to a numerical routine (e.g. p < 1 for an Lp norm).
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

/// A solver failed to converge or produced unusable output.
struct NumericalError : std::runtime_error {
    NumericalError(const std::string& what, std::vector<double> residual_history = {})
        : std::runtime_error(what), history(std::move(residual_history)) {}
    std::vector<double> history;
};

/// The nonlinear density solve collapsed onto the trivial zero branch.
struct BranchError : std::runtime_error {
    explicit BranchError(const std::string& what) : std::runtime_error(what) {}
};

/// A time step exceeded the current stability bound; carries the admissible step.
struct StepRejected : std::runtime_error {
    StepRejected(const std::string& what, double admissible_dt)
        : std::runtime_error(what), dt_max(admissible_dt) {}
    double dt_max;
};

/// A monitored inequality failed beyond its tolerance.
struct VerificationError : std::runtime_error {
    explicit VerificationError(const std::string& what) : std::runtime_error(what) {}
};

inline void ensure(bool cond, const std::string& msg) {
    if (!cond) throw ConfigError(msg);
}

inline bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

template <class T>
std::string str(const T& v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

/// splitmix64; used to derive independent per-worker seeds from one user seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace chemolab
