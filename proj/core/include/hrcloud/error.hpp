#pragma once

#include <stdexcept>
#include <string>

namespace hrcloud {

// Base for everything thrown by the toolkit.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad configuration or argument validation (CLI exit code 1).
struct ConfigError : Error {
    using Error::Error;
};

// Missing or malformed input data (CLI exit code 3).
struct DataError : Error {
    using Error::Error;
};

// Tensor/feature-map shape contract violations (CLI exit code 2).
struct ShapeError : Error {
    using Error::Error;
};

// A metric that is undefined for the given input (e.g. empty foreground).
struct UndefinedMetricError : Error {
    using Error::Error;
};

}  // namespace hrcloud
