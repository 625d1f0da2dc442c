#pragma once

#include <stdexcept>
#include <string>

namespace carleman_lab {

// Bad input to an operation: violated precondition or invalid parameters.
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// The numerics broke down: non-finite values, stalled linear solves.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Files that cannot be read or written.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace carleman_lab
