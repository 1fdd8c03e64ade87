#pragma once

#include <stdexcept>
#include <string>

namespace drexp {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument or parameter outside its admissible domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Iterative routine (MLE, refinement) failed to reach its tolerance.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// Singular or non-positive-definite information, degenerate sample.
class DegeneracyError : public Error {
public:
    using Error::Error;
};

/// Expectation integral diverges or cannot be evaluated to tolerance.
class NonIntegrableError : public Error {
public:
    using Error::Error;
};

/// Root bracketing or other numerical failure.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Large-sample expansion requested at a boundary MLE.
class BoundaryError : public Error {
public:
    using Error::Error;
};

/// A theorem-level invariant (e.g. alpha >= 0) was violated beyond rounding.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

/// Malformed input files, configs or command lines.
class UsageError : public Error {
public:
    using Error::Error;
};

} // namespace drexp
