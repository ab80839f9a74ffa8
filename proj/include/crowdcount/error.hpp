#pragma once

#include <stdexcept>
#include <string>

namespace crowdcount {

enum class ErrorCode {
  InvalidArgument,
  MalformedHeader,
  TruncatedPayload,
  UnsupportedMaxval,
  Parse,
  Validation,
  Io,
  Config,
  ModelIncompatible,
  InsufficientData,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) throw Error(ErrorCode::InvalidArgument, what);
}

}  // namespace crowdcount
