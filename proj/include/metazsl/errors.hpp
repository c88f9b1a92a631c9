#pragma once

#include <stdexcept>
#include <string>

namespace metazsl {

// Dimension or batch-alignment violation.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid configuration value or combination.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent dataset content.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite value where a finite one is required.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training produced non-finite losses or parameters. Carries the outer step
// at which the run aborted.
struct DivergenceError : std::runtime_error {
    long long step;
    DivergenceError(long long step_, const std::string& what)
        : std::runtime_error(what), step(step_) {}
};

}  // namespace metazsl
