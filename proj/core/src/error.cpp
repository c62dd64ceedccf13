#include "fairmdp/error.hpp"

namespace fairmdp {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kCapExceeded: return "CapExceeded";
    case ErrorCode::kInfeasibleModel: return "InfeasibleModel";
    case ErrorCode::kInvalidModel: return "InvalidModel";
    case ErrorCode::kBadPermutation: return "BadPermutation";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kInvalidWeights: return "InvalidWeights";
    case ErrorCode::kNotSymmetric: return "NotSymmetric";
    case ErrorCode::kInfeasibleAction: return "InfeasibleAction";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kUnbounded: return "Unbounded";
    case ErrorCode::kNumericFailure: return "NumericFailure";
    case ErrorCode::kConfigInvalid: return "ConfigInvalid";
    case ErrorCode::kNotBinaryAction: return "NotBinaryAction";
    case ErrorCode::kDegeneratePriorities: return "DegeneratePriorities";
    case ErrorCode::kTraceMismatch: return "TraceMismatch";
    case ErrorCode::kPolicyInfeasibleAction: return "PolicyInfeasibleAction";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kParseError: return "ParseError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace fairmdp
