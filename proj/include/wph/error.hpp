#pragma once

#include <stdexcept>
#include <string>

namespace wph {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or unsupported input data (bad file, too-small image, NaN pixel).
class InputError : public Error {
public:
    using Error::Error;
};

/// Invalid run configuration (non-power-of-two side, depth out of range, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Invalid numeric parameter passed to a function (e.g. epsilon <= 0).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Inconsistent shapes between objects that must agree.
class StructuralError : public Error {
public:
    using Error::Error;
};

}  // namespace wph
