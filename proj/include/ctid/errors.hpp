#pragma once

#include <stdexcept>
#include <string>

namespace ctid {

/// Simulation produced a non-finite sample; `index` is the first offending k.
class SimulationOverflow : public std::runtime_error {
public:
    SimulationOverflow(std::size_t index, const std::string& what)
        : std::runtime_error(what + " (first non-finite sample at index " + std::to_string(index) + ")"),
          index_(index) {}
    std::size_t index() const { return index_; }

private:
    std::size_t index_;
};

/// Normal matrix of an instrumental-variable step is singular or the
/// condition estimate exceeded the configured limit. Usually a sign of
/// insufficient input excitation.
class SingularMatrixError : public std::runtime_error {
public:
    explicit SingularMatrixError(double condition)
        : std::runtime_error("normal matrix is numerically singular (condition estimate " +
                             std::to_string(condition) + ")"),
          condition_(condition) {}
    SingularMatrixError(double condition, const std::string& what)
        : std::runtime_error(what), condition_(condition) {}
    double condition() const { return condition_; }

private:
    double condition_;
};

/// Generic numerical failure (non-finite matrix exponential, undefined norm, ...).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace ctid
