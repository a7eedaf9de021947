#pragma once

#include <stdexcept>
#include <string>

namespace dualcusum {

// All library failures derive from Error so callers can catch one type and
// still branch on the category when they need to.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad or unsupported configuration (unknown family, out-of-range parameter).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input outside the support of a law, or non-finite increments.
class InputError : public Error {
public:
    using Error::Error;
};

/// Two laws that were expected to share a support do not.
class DomainMismatchError : public Error {
public:
    using Error::Error;
};

/// A requested quantity does not exist (moment pair, infinite conditional mean,
/// unreachable threshold, empty feasible set).
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// A fixed-point or renewal computation was asked to run under non-negative drift.
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// Too few samples or too short a horizon for the requested accuracy.
class PrecisionError : public Error {
public:
    using Error::Error;
};

/// Negative drift assumption of an approximation is violated.
class ModelViolationError : public Error {
public:
    using Error::Error;
};

/// A Monte Carlo estimate could not be formed (no completed runs).
class EstimationError : public Error {
public:
    using Error::Error;
};

}  // namespace dualcusum
