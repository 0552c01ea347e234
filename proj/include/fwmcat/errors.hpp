#pragma once

#include <stdexcept>
#include <string>

namespace fwmcat {

/// Invalid user input: bad configuration, out-of-range arguments, malformed files.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical failure: step-size underflow, truncation loss, non-PSD matrices.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A quantity that is mathematically undefined for the given state (e.g. a Fano factor at zero mean).
class UndefinedError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

}  // namespace fwmcat
