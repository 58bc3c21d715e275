#pragma once

#include <stdexcept>
#include <string>

namespace vwp {

enum class ErrorKind {
  kUsage,
  kConfig,
  kData,
  kIndex,
  kSize,
  kLength,
  kCapacity,
  kResource,
  kNumeric,
  kEmptyLoss,
  kState,
  kTraining,
};

const char* to_string(ErrorKind kind);

/// Every failure raised by the library. The kind decides the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// 1 = usage/config, 2 = data-shaped problems, 3 = numeric or training.
int exit_code_for(ErrorKind kind);

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace vwp
