#pragma once

#include <stdexcept>
#include <string>

namespace gaussvol {

// Bad inputs or ill-formed specifications. CLI maps this to exit code 1.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A numerical procedure failed to meet its contract. CLI maps this to exit code 2.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace gaussvol
