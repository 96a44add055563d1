#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pprlab {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

/// Structural problem in a graph: inconsistent port tables, self-loops, gaps.
class InvalidGraph : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Oracle signals. BudgetExhausted is recoverable: callers harvest whatever
// was computed before the limit was hit.
class OracleError : public Error {
public:
    using Error::Error;
};

class BudgetExhausted : public OracleError {
public:
    BudgetExhausted() : OracleError("query budget exhausted") {}
};

class UncoveredNode : public OracleError {
public:
    using OracleError::OracleError;
};

class PortOutOfRange : public OracleError {
public:
    using OracleError::OracleError;
};

class NoUncoveredPort : public OracleError {
public:
    using OracleError::OracleError;
};

class InfeasibleParams : public Error {
public:
    using Error::Error;
};

class SizeMismatch : public Error {
public:
    using Error::Error;
};

class MultiplicityExceeded : public Error {
public:
    using Error::Error;
};

class NonPositiveDenominator : public Error {
public:
    using Error::Error;
};

class EnumerationTooLarge : public Error {
public:
    using Error::Error;
};

}  // namespace pprlab
