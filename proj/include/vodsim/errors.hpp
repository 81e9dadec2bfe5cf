#pragma once

#include <stdexcept>
#include <string>

namespace vodsim {

/// Caller supplied a value outside an operation's domain.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A scenario or strategy description is malformed or inconsistent.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A simulation or formula reached a state that should be impossible.
/// Always indicates a bug, never bad user input.
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace vodsim
