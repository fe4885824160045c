#pragma once

#include <stdexcept>
#include <string>

namespace cevhedge {

/// Raised for arguments outside an operation's documented domain.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a requested quantity is mathematically infinite (e.g. a divergent moment).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Series that fail to converge, NaN/overflow in accumulators, singular systems.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Fixed-point iteration exhausted its budget.
class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, double last_gap, int iterations)
        : NumericalError(what), last_gap_(last_gap), iterations_(iterations) {}

    double last_gap() const noexcept { return last_gap_; }
    int iterations() const noexcept { return iterations_; }

private:
    double last_gap_;
    int iterations_;
};

/// Query outside the tabulated grid of a field.
class OutOfGrid : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

}  // namespace cevhedge
