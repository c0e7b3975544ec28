#pragma once

#include <stdexcept>
#include <string>

namespace demfuse {

// Base of every error thrown by the library. Callers that only care about
// success/failure catch this; the CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed text input (grid header, model file, config file).
class ParseError : public Error {
public:
    using Error::Error;
};

// Well-formed tokens that do not add up (value counts, matrix shapes).
class StructuralError : public Error {
public:
    using Error::Error;
};

// Two rasters that must share a geometry do not.
class GeometryError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

class DivergenceError : public Error {
public:
    using Error::Error;
};

// Invalid arguments to an operation (bad enum choice, bad sizes).
class UsageError : public Error {
public:
    using Error::Error;
};

}  // namespace demfuse
