#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace didldv {

/// Malformed input bytes. Carries the 1-based line number of the offending row.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Well-formed input that violates a dataset invariant.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An estimator could not produce a result on the given data.
class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Rank-deficient least squares design.
class SingularityError : public EstimationError {
public:
    using EstimationError::EstimationError;
};

/// Treated support not covered by control support (levels or strata).
class OverlapError : public EstimationError {
public:
    using EstimationError::EstimationError;
};

/// Propensity score equal to one where a control weight is required.
class PositivityError : public EstimationError {
public:
    using EstimationError::EstimationError;
};

/// Iterative fit failed to converge.
class FitError : public EstimationError {
public:
    using EstimationError::EstimationError;
};

/// Resampling-based inference could not be completed.
class InferenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace didldv
