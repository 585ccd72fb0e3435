#pragma once

#include <stdexcept>
#include <string>

namespace stormrtc {

/// Caller supplied data that violates a documented precondition.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A query fell outside the span covered by the loaded records.
class OutOfRange : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// An internal invariant broke (mass balance, topology). Always a bug signal.
class InvariantViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace stormrtc
