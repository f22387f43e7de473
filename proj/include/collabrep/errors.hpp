#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace collabrep {

enum class ErrorCode {
  ZeroColumn,
  DimensionMismatch,
  EmptyInput,
  UnknownClass,
  NonPositiveLambda,
  NegativeThreshold,
  BadSparsity,
  BadGrid,
  BadParams,
  FingerprintMismatch,
  SingleClass,
  BadThreshold,
  BadDimension,
  EmptyImage,
  BadFraction,
  OccluderTooSmall,
  TooFewSamples,
  DegenerateAngle,
  RankDeficient,
  MissingPath,
  MixedImageSizes,
  MalformedMatrix,
  ConfigInvalid,
  OverlappingClasses,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

// All library failures are reported through this type; `code()` is the
// machine-readable kind that the CLI serializes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace collabrep
