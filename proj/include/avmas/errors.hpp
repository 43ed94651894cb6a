#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace avmas {

/// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& message) : std::runtime_error(message) {}
};

/// An argument or field value violates its contract. Carries the name of the
/// offending field when one can be named.
class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& message)
        : Error(field.empty() ? message : field + ": " + message),
          field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Virtual filesystem path that does not exist.
class NotFoundError : public Error {
public:
    using Error::Error;
};

/// Illegal process-table transition (unknown pid, exit after exit).
class StateError : public Error {
public:
    using Error::Error;
};

/// Specimen source rejected by the parser. Line and column are 1-based;
/// `expected` lists the tokens that would have been accepted, when known.
class SpecimenParseError : public Error {
public:
    SpecimenParseError(std::size_t line, std::size_t column, const std::string& message,
                       std::vector<std::string> expected = {})
        : Error("line " + std::to_string(line) + ":" + std::to_string(column) + ": " + message +
                format_expected(expected)),
          line_(line),
          column_(column),
          expected_(std::move(expected)) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }
    const std::vector<std::string>& expected() const noexcept { return expected_; }

private:
    static std::string format_expected(const std::vector<std::string>& expected) {
        if (expected.empty()) {
            return "";
        }
        std::string out = " (expected ";
        for (std::size_t i = 0; i < expected.size(); ++i) {
            if (i > 0) {
                out += i + 1 == expected.size() ? " or " : ", ";
            }
            out += expected[i];
        }
        out += ")";
        return out;
    }

    std::size_t line_;
    std::size_t column_;
    std::vector<std::string> expected_;
};

/// Malformed or schema-violating JSON input (report, verdict, profile,
/// manifest). Names the field that failed.
class SchemaError : public Error {
public:
    SchemaError(std::string field, const std::string& message)
        : Error(field.empty() ? message : field + ": " + message),
          field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Inputs that cannot legally be compared (analyzer preconditions).
class PreconditionError : public Error {
public:
    using Error::Error;
};

}  // namespace avmas
