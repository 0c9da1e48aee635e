#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qhyb {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition (index range, shape, unitarity, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A configured size cap (qubit count, frame size) would be exceeded.
class ResourceLimitError : public Error {
public:
    using Error::Error;
};

/// Post-selection on an outcome whose probability is below threshold.
class DegeneratePostselectionError : public Error {
public:
    DegeneratePostselectionError(const std::string& what, double probability)
        : Error(what), probability_(probability) {}
    double probability() const noexcept { return probability_; }

private:
    double probability_;
};

/// Matrix is singular to tolerance, indefinite, or too ill-conditioned for the clock register.
class ConditioningError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

/// Circuit text could not be parsed. Carries a 1-based line/column.
class ParseError : public Error {
public:
    ParseError(std::size_t line, std::size_t column, const std::string& message)
        : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
                message),
          line_(line), column_(column), message_(message) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }
    const std::string& message() const noexcept { return message_; }

private:
    std::size_t line_;
    std::size_t column_;
    std::string message_;
};

/// Malformed frame or message; `offset` is the byte offset of the defect.
class ProtocolError : public Error {
public:
    ProtocolError(const std::string& what, std::size_t offset)
        : Error(what + " (byte offset " + std::to_string(offset) + ")"), offset_(offset),
          detail_(what) {}
    std::size_t offset() const noexcept { return offset_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::size_t offset_;
    std::string detail_;
};

/// Socket-level failure: bind, connect, or connection loss.
class TransportError : public Error {
public:
    using Error::Error;
};

/// The device answered a request with an ERROR message.
class DeviceError : public Error {
public:
    DeviceError(std::string code, const std::string& detail)
        : Error("device error " + code + ": " + detail), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

class RefinementError : public Error {
public:
    RefinementError(const std::string& what, double last_residual, int iterations)
        : Error(what), last_residual_(last_residual), iterations_(iterations) {}
    double last_residual() const noexcept { return last_residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double last_residual_;
    int iterations_;
};

/// Job document or system file does not match its schema. `path` names the offending field.
class SchemaError : public Error {
public:
    SchemaError(std::string path, const std::string& message)
        : Error(path + ": " + message), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

} // namespace qhyb
