#pragma once

#include <stdexcept>
#include <string>

namespace mammo {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument violates an operation's precondition (non-positive sigma,
/// shape mismatch, out-of-range fraction, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// The input carries no usable signal: constant image, empty mask,
/// collapsed percentile range.
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

class SegmentationError : public Error {
public:
    using Error::Error;
};

/// Inpainting was asked to fill a hole that has no known pixels around it.
class NoBoundaryError : public Error {
public:
    using Error::Error;
};

/// The elastic warp pushed the target region completely out of frame.
class DeformationOutOfBoundsError : public Error {
public:
    using Error::Error;
};

/// Malformed row in an annotation / prediction file. `row()` is 1-based.
class ParseError : public Error {
public:
    ParseError(std::string source, std::size_t row, const std::string& what)
        : Error(source + ":" + std::to_string(row) + ": " + what),
          source_(std::move(source)), row_(row) {}

    const std::string& source() const noexcept { return source_; }
    std::size_t row() const noexcept { return row_; }

private:
    std::string source_;
    std::size_t row_;
};

/// Scheduler state transition requested on a state that cannot support it.
class StateError : public Error {
public:
    using Error::Error;
};

/// A pluggable component (trainer) broke its interface contract.
class ContractError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace mammo
