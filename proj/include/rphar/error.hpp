#pragma once

#include <stdexcept>
#include <string>

namespace rphar {

/// Broad failure class; the CLI maps each to an exit code.
enum class ErrorCategory { usage = 1, data = 2, protocol = 3 };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }
    int exit_code() const noexcept { return static_cast<int>(category_); }

private:
    ErrorCategory category_;
};

/// A file could not be opened or read.
struct IngestError : Error {
    explicit IngestError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

/// Malformed token in an input file.
struct ParseError : Error {
    explicit ParseError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

/// Value outside its admissible range.
struct RangeError : Error {
    explicit RangeError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

/// Sequence too short for the requested operation.
struct LengthError : Error {
    explicit LengthError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

/// Inconsistent sizes or dimensions between arguments.
struct DimensionError : Error {
    explicit DimensionError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

/// Image too small to hold a single descriptor patch.
struct EmptyGridError : Error {
    explicit EmptyGridError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

/// Bad parameter value or configuration.
struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorCategory::usage, what) {}
};

/// Violation of the evaluation protocol (split plans, class lists, sample counts).
struct ProtocolError : Error {
    explicit ProtocolError(const std::string& what) : Error(ErrorCategory::protocol, what) {}
};

}  // namespace rphar
