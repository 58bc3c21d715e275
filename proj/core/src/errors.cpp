#include "vwp/errors.hpp"

namespace vwp {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return "usage error";
    case ErrorKind::kConfig: return "config error";
    case ErrorKind::kData: return "data error";
    case ErrorKind::kIndex: return "index error";
    case ErrorKind::kSize: return "size error";
    case ErrorKind::kLength: return "length error";
    case ErrorKind::kCapacity: return "capacity error";
    case ErrorKind::kResource: return "resource error";
    case ErrorKind::kNumeric: return "numeric error";
    case ErrorKind::kEmptyLoss: return "empty-loss error";
    case ErrorKind::kState: return "state error";
    case ErrorKind::kTraining: return "training error";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage:
    case ErrorKind::kConfig:
      return 1;
    case ErrorKind::kData:
    case ErrorKind::kIndex:
    case ErrorKind::kSize:
    case ErrorKind::kLength:
    case ErrorKind::kCapacity:
    case ErrorKind::kResource:
      return 2;
    case ErrorKind::kNumeric:
    case ErrorKind::kEmptyLoss:
    case ErrorKind::kState:
    case ErrorKind::kTraining:
      return 3;
  }
  return 1;
}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace vwp
