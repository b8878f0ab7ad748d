#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace synbd {

// Error categories map onto the CLI exit codes: config/usage -> 1,
// data -> 2, adapter/protocol -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

// Malformed bracketed tree; `offset` is the byte offset into the source.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : DataError(what + " at byte " + std::to_string(offset)),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class AdapterError : public Error {
 public:
  using Error::Error;
};

// Raised when training produces a non-finite loss.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace synbd
