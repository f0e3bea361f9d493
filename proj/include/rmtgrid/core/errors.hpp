#pragma once

#include <stdexcept>
#include <string>

namespace rmtgrid {

/// Malformed or non-finite input data (bad shapes, NaN entries, parse failures).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A documented precondition of an operation does not hold (e.g. a
/// non-Hermitian matrix handed to the Hermitian eigensolver).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// An iterative routine stopped before reaching its tolerance. Carries the
/// best estimate found so callers may still inspect it.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double best_estimate)
        : std::runtime_error(what), best_estimate_(best_estimate) {}

    double best_estimate() const noexcept { return best_estimate_; }

private:
    double best_estimate_;
};

} // namespace rmtgrid
