#pragma once

#include <stdexcept>
#include <string>

namespace torusrg {

enum class ErrorCode {
  InvalidArgument = 1,
  RationalExhausted,
  PrecisionExhausted,
  ZeroInput,
  IndexOutOfRange,
  PoleAtInput,
  ConeViolation,
  DomainError,
  SingularJacobian,
  OutsideBall,
  NoConvergence,
  DomainExceeded,
  ZeroSlope,
  Inconclusive,
  ConfigInvalid,
  Io,
  CertificateFailed,
  Internal,
};

const char* error_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace torusrg
