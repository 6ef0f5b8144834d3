#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wgt {

// Bad input data (malformed files, missing rows, inconsistent dimensions).
// The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed HAR document; offset is the byte position reported by the parser.
class HarParseError : public DataError {
 public:
  HarParseError(const std::string& what, std::size_t offset)
      : DataError(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Caller violated a documented precondition (unknown node, bad parameter).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace wgt
