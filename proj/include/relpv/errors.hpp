#pragma once

#include <stdexcept>
#include <string>

namespace relpv {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape / extent mismatch between operands.
struct DimensionError : Error {
    using Error::Error;
};

// Invalid hyperparameter or argument value (e.g. even STFT window size).
struct ParameterError : Error {
    using Error::Error;
};

// Out-of-range class label or index.
struct IndexError : Error {
    using Error::Error;
};

// Malformed on-disk data; carries the byte offset where parsing failed.
struct FormatError : Error {
    FormatError(const std::string& what, std::size_t offset)
        : Error(what + " (byte offset " + std::to_string(offset) + ")"),
          byte_offset(offset) {}
    std::size_t byte_offset;
};

// Non-finite value detected where finiteness is required (e.g. training loss).
struct NumericError : Error {
    using Error::Error;
};

}  // namespace relpv
