#pragma once

#include <stdexcept>
#include <string>

namespace evtrack {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed file or text input. Carries the offending source when known.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Tensor or grid dimensions that do not fit together.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Precondition on argument values violated (non-positive sizes, unsorted streams, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// An operation was invoked on an object in the wrong state.
class StateError : public Error {
public:
    using Error::Error;
};

/// The tracker could not form an exemplar from its initialization events.
class InitializationError : public Error {
public:
    using Error::Error;
};

}  // namespace evtrack
