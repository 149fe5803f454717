#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spinepatch {

// Validation-class failures map to CLI exit code 1.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidGeometryError : ValidationError {
    using ValidationError::ValidationError;
};

struct InvalidArgumentError : ValidationError {
    using ValidationError::ValidationError;
};

struct SchemaError : ValidationError {
    using ValidationError::ValidationError;
};

struct EmptyCropError : ValidationError {
    using ValidationError::ValidationError;
};

struct EmptyMaskError : ValidationError {
    using ValidationError::ValidationError;
};

struct SplitError : ValidationError {
    using ValidationError::ValidationError;
};

struct TrainingError : ValidationError {
    using ValidationError::ValidationError;
};

struct ConfigError : ValidationError {
    using ValidationError::ValidationError;
};

// File parse failure, carries the byte offset where decoding stopped.
struct FileParseError : ValidationError {
    FileParseError(const std::string& msg, std::size_t offset)
        : ValidationError(msg + " (byte offset " + std::to_string(offset) + ")"),
          byte_offset(offset) {}
    std::size_t byte_offset;
};

// I/O-class failures map to CLI exit code 2.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace spinepatch
