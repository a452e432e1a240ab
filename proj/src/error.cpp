#include "torusrg/error.hpp"

namespace torusrg {

const char* error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::RationalExhausted: return "RationalExhausted";
    case ErrorCode::PrecisionExhausted: return "PrecisionExhausted";
    case ErrorCode::ZeroInput: return "ZeroInput";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::PoleAtInput: return "PoleAtInput";
    case ErrorCode::ConeViolation: return "ConeViolation";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::SingularJacobian: return "SingularJacobian";
    case ErrorCode::OutsideBall: return "OutsideBall";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DomainExceeded: return "DomainExceeded";
    case ErrorCode::ZeroSlope: return "ZeroSlope";
    case ErrorCode::Inconclusive: return "Inconclusive";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::Io: return "Io";
    case ErrorCode::CertificateFailed: return "CertificateFailed";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace torusrg
