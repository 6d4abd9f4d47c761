#pragma once

#include <stdexcept>
#include <string>

namespace pclab {

// Invalid sparse structure or file contents: unsorted or duplicate
// indices, malformed Matrix Market input, bad checkpoint files.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape or argument mismatch between operands.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Numerical breakdown: nonpositive pivots, NaN activations, zero
// diagonals in triangular solves.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem failures.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace pclab
