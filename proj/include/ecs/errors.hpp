#pragma once

#include <stdexcept>
#include <string>

#include "ecs/types.hpp"

namespace ecs {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Argument outside a function's domain (z = 0 for the Theta product, bad config, ...).
struct DomainError : Error {
    using Error::Error;
};

// Evaluation point within the guard distance of a pole or zero.
struct PoleError : Error {
    using Error::Error;
};

// A vanishing energy denominator was hit; `offending` names the lattice point.
struct ResonanceError : Error {
    ResonanceError(std::string msg, LatticeVector m)
        : Error(std::move(msg)), offending(std::move(m)) {}
    LatticeVector offending;
};

struct NoConvergenceError : Error {
    using Error::Error;
};

// Truncation policy too small for the requested computation.
struct TruncationError : Error {
    using Error::Error;
};

// Selection between near-equal candidates could not be resolved; both values carried.
struct AmbiguityError : Error {
    AmbiguityError(std::string msg, double first, double second)
        : Error(std::move(msg)), value_a(first), value_b(second) {}
    double value_a;
    double value_b;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace ecs
