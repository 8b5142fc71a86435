#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dualcap {

// Base of every error raised by the library. Subclasses split into two
// families: input problems the caller can fix (validation) and failures that
// happen while computing (runtime).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual bool is_validation() const noexcept { return true; }
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        detail_(what),
        offset_(offset) {}

  const std::string& detail() const noexcept { return detail_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::string detail_;
  std::size_t offset_;
};

class StateError : public Error {
 public:
  using Error::Error;
  bool is_validation() const noexcept override { return false; }
};

class NumericError : public Error {
 public:
  using Error::Error;
  bool is_validation() const noexcept override { return false; }
};

class OracleError : public Error {
 public:
  using Error::Error;
  bool is_validation() const noexcept override { return false; }
};

}  // namespace dualcap
