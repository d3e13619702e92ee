#pragma once

#include <stdexcept>
#include <string>

namespace veram {

// Exit-code mapping for the CLI lives in tools/veram_cli.cpp:
// UsageError -> 2, DataError (and subtypes) -> 3, NumericError -> 4.

/// Invalid flags, invalid argument combinations, violated preconditions.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

/// Anything wrong with input files or their contents.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

struct CorruptHeaderError : DataError {
  explicit CorruptHeaderError(const std::string& what) : DataError(what) {}
};

struct ChecksumMismatchError : DataError {
  explicit ChecksumMismatchError(const std::string& what) : DataError(what) {}
};

struct TruncatedPayloadError : DataError {
  explicit TruncatedPayloadError(const std::string& what) : DataError(what) {}
};

/// Non-finite value detected in a forward pass, backward pass or update.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Tensor shape disagreement; message names both shapes.
struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

/// backward() invoked twice on the same recorded graph.
struct StaleGraphError : std::runtime_error {
  explicit StaleGraphError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace veram
