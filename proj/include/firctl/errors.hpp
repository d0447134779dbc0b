#pragma once

#include <stdexcept>
#include <string>

namespace firctl {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not conform.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// An iterative kernel ran out of its sweep budget.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual)
        : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// A documented precondition on an argument was violated.
class ContractError : public Error {
public:
    using Error::Error;
};

/// A linear operator was singular to working precision.
class SingularityError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of the operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A feasible LMI point could not be turned into a controller.
class DegenerateSolutionError : public Error {
public:
    using Error::Error;
};

}  // namespace firctl
