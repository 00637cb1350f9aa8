// Error taxonomy shared by the library and the CLI.
// The CLI maps these onto process exit codes: IoError -> 2,
// SchemaError -> 3, NumericError -> 4.

#pragma once

#include <stdexcept>
#include <string>

namespace frn {

// Missing or unreadable/unwritable files.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input data: bad headers, missing cells, out-of-range values.
struct SchemaError : std::runtime_error {
  explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

// NaN/Inf encountered, diverging loss, degenerate statistics.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace frn
