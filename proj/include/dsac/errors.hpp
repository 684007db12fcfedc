#pragma once

#include <stdexcept>

namespace dsac {

/// A caller broke a documented precondition (bad shape, bad range, bad key).
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A finite-math contract failed at runtime: overflow, NaN, non-convergence.
/// The message carries the diagnostic payload (inputs, iterate trace).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace dsac
