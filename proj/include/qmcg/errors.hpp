#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qmcg {

// Requested Sobol' dimension exceeds the direction-number table.
class UnsupportedDimension : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

// Correlation matrix is not positive definite.
class FactorizationError : public std::runtime_error {
public:
    FactorizationError(const std::string& what, std::size_t failing_minor)
        : std::runtime_error(what), failing_minor_(failing_minor) {}

    // 1-based order of the leading minor that is not positive.
    std::size_t failing_minor() const noexcept { return failing_minor_; }

private:
    std::size_t failing_minor_;
};

// Inconsistent or malformed configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A path on which an almost-surely non-zero Malliavin denominator vanished numerically.
class DegeneratePath : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A run that cannot produce a trustworthy estimate.
class EstimationFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace qmcg
