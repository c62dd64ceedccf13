#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fairmdp {

enum class ErrorCode {
  kCapExceeded,
  kInfeasibleModel,
  kInvalidModel,
  kBadPermutation,
  kLengthMismatch,
  kInvalidWeights,
  kNotSymmetric,
  kInfeasibleAction,
  kInfeasible,
  kUnbounded,
  kNumericFailure,
  kConfigInvalid,
  kNotBinaryAction,
  kDegeneratePriorities,
  kTraceMismatch,
  kPolicyInfeasibleAction,
  kNonFiniteLoss,
  kIoError,
  kParseError,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; callers dispatch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace fairmdp
