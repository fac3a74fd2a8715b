#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace adapt {

/// Root of every exception thrown by the library. Each subclass names one
/// failure category so callers (the CLI in particular) can map it to an exit
/// code without parsing messages.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input outside the mathematical domain of an operation (bad latitude, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Query outside a supported range (pose lookup beyond the trajectory).
class RangeError : public Error {
public:
    using Error::Error;
};

/// A sample required by the computation carries invalid status bits.
class ValidityError : public Error {
public:
    using Error::Error;
};

/// Iterative numeric procedure failed to converge.
class NumericError : public Error {
public:
    NumericError(const std::string& what, int iterations)
        : Error(what + " (after " + std::to_string(iterations) + " iterations)"),
          iterations_(iterations) {}

    [[nodiscard]] int iterations() const noexcept { return iterations_; }

private:
    int iterations_;
};

/// Viewing ray does not reach the ground plane at a usable angle.
class HorizonError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

class DegenerateGeometryError : public Error {
public:
    using Error::Error;
};

/// The data carries no information about the requested unknown.
class UnobservableError : public Error {
public:
    using Error::Error;
};

/// Broken caller contract (dimension mismatch, bad configuration value).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Malformed external data (CSV, JSON, PNG, label layers).
class ParseError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Invalid mission / simulation plan.
class PlanError : public Error {
public:
    using Error::Error;
};

/// Evaluation over a region with no labelled pixels.
class EmptySupportError : public Error {
public:
    using Error::Error;
};

/// Illegal state change in a ledger or command lifecycle.
class TransitionError : public Error {
public:
    using Error::Error;
};

/// Wire data that cannot be framed (bad magic, truncated, bad length).
class FramingError : public Error {
public:
    using Error::Error;
};

/// A frame whose checksum does not verify.
class IntegrityError : public Error {
public:
    using Error::Error;
};

} // namespace adapt
