#pragma once

#include <stdexcept>
#include <string>

namespace tarch {

/// Malformed model or run configuration (missing regime, bad coefficients, unknown keys).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Requested moment order exceeds the declared finite-moment exponent r0.
class MomentError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A closed-form criterion was asked for outside the conditions it is stated under.
class NotApplicableError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Precondition of a numerical procedure not met (bracket does not straddle, no root exists, ...).
class PreconditionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Root bracket whose end values do not straddle the target.
class BracketError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

class QuadratureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace tarch
