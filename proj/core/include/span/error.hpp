#pragma once

#include <stdexcept>
#include <string>

namespace span {

enum class ErrorKind {
  kShape,    // operand shapes do not conform
  kConfig,   // bad configuration value or command usage
  kIo,       // file system, image or dataset I/O
  kCorrupt,  // malformed artifact (checkpoint, index file)
  kNumeric,  // non-finite value where a finite one is required
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}
  Error(ErrorKind kind, std::string message, long long offset)
      : std::runtime_error(std::move(message)), kind_(kind), offset_(offset) {}

  ErrorKind kind() const { return kind_; }

  /// Byte offset of the defect for kCorrupt errors, -1 otherwise.
  long long offset() const { return offset_; }

 private:
  ErrorKind kind_;
  long long offset_ = -1;
};

}  // namespace span
