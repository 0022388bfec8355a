#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lsavg {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed expression text. offset is a byte offset into the input.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class UndeclaredIdentifier : public ParseError {
public:
    UndeclaredIdentifier(const std::string& name, std::size_t offset)
        : ParseError("undeclared identifier '" + name + "'", offset), name_(name) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

class ExponentError : public ParseError {
public:
    using ParseError::ParseError;
};

/// Evaluation hit a point outside the domain of a subexpression.
class DomainError : public Error {
public:
    DomainError(const std::string& what, const std::string& subexpr)
        : Error(what + " in '" + subexpr + "'"), subexpr_(subexpr) {}
    const std::string& subexpression() const noexcept { return subexpr_; }

private:
    std::string subexpr_;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, double t)
        : Error(what + " at t=" + std::to_string(t)), time_(t) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

class SingularError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// A map comes too close to its target value on a box boundary.
class BoundaryError : public Error {
public:
    using Error::Error;
};

/// Problem file or input validation failure.
class ValidationError : public Error {
public:
    ValidationError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

}  // namespace lsavg
