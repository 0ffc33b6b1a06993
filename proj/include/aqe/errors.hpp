#pragma once

#include <stdexcept>
#include <string>

namespace aqe {

/// Operand width/shape disagrees with a network or batch layout.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Non-finite values showed up where finite ones are required
/// (losses, targets, gradients), or an iteration failed to converge.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Operation applied to an object in the wrong state
/// (empty buffer, stale forward cache, exhausted episode).
struct InvalidStateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Config or metrics text could not be parsed; the message names the
/// offending key or line.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// File could not be read or written; the message carries the path.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Requested capability the object does not provide (e.g. state
/// injection on an environment that cannot rewind).
struct UnsupportedFeatureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace aqe
