#include "collabrep/errors.hpp"

namespace collabrep {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ZeroColumn: return "ZeroColumn";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::UnknownClass: return "UnknownClass";
    case ErrorCode::NonPositiveLambda: return "NonPositiveLambda";
    case ErrorCode::NegativeThreshold: return "NegativeThreshold";
    case ErrorCode::BadSparsity: return "BadSparsity";
    case ErrorCode::BadGrid: return "BadGrid";
    case ErrorCode::BadParams: return "BadParams";
    case ErrorCode::FingerprintMismatch: return "FingerprintMismatch";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::BadThreshold: return "BadThreshold";
    case ErrorCode::BadDimension: return "BadDimension";
    case ErrorCode::EmptyImage: return "EmptyImage";
    case ErrorCode::BadFraction: return "BadFraction";
    case ErrorCode::OccluderTooSmall: return "OccluderTooSmall";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::DegenerateAngle: return "DegenerateAngle";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::MissingPath: return "MissingPath";
    case ErrorCode::MixedImageSizes: return "MixedImageSizes";
    case ErrorCode::MalformedMatrix: return "MalformedMatrix";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::OverlappingClasses: return "OverlappingClasses";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace collabrep
