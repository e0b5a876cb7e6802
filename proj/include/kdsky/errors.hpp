#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kdsky {

// Caller supplied something that violates a precondition (bad item, bad config).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An engine invariant broke. Never expected in a correct build.
class InternalFault : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Stream file could not be read or a row was rejected.
class IngestionError : public std::runtime_error {
 public:
  IngestionError(const std::string& what, std::size_t row = 0)
      : std::runtime_error(row == 0 ? what : "row " + std::to_string(row) + ": " + what), row_(row) {}

  /// 1-based line number in the source file, 0 when not tied to a row.
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace kdsky
