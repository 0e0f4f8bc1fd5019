#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace ecfc {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller violated a precondition (bad dimensions, empty batch, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

// Invalid run configuration (bad hyperparameters, split does not fit the series).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Problems with the input data itself.
class DataError : public Error {
public:
    using Error::Error;
};

// Malformed cell or date label; carries the 1-based line number in the source.
class ParseError : public DataError {
public:
    ParseError(std::size_t line, const std::string& what)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Row with the wrong number of cells.
class ArityError : public ParseError {
public:
    using ParseError::ParseError;
};

// Missing measurement under the strict gap policy.
class GapError : public DataError {
public:
    GapError(std::string timestamp, const std::string& what)
        : DataError(what), timestamp_(std::move(timestamp)) {}
    const std::string& timestamp() const noexcept { return timestamp_; }

private:
    std::string timestamp_;
};

// Reading that cannot be physical (negative energy).
class ValidationError : public DataError {
public:
    using DataError::DataError;
};

// Index range reaching outside the series.
class BoundsError : public DataError {
public:
    using DataError::DataError;
};

// MAPE with every target excluded by the zero floor.
class UndefinedMetricError : public DataError {
public:
    using DataError::DataError;
};

class IoError : public Error {
public:
    using Error::Error;
};

class CheckpointError : public Error {
public:
    enum class Kind { BadMagic, Version, Truncated, Checksum, Malformed };

    CheckpointError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

}  // namespace ecfc
