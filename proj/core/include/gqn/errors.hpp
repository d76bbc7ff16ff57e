#pragma once

#include <stdexcept>
#include <string>

namespace gqn {

// Precondition violated by the caller (bad shapes, unsupported sizes, ...).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Operation requested in a state that does not allow it.
class InvalidState : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Rejection sampling or a bounded container ran out of room.
class CapacityExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Checkpoint cannot be read or does not fit the requested architecture.
class CheckpointIncompatible : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// NaN or Inf escaped a layer or a loss.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace gqn
