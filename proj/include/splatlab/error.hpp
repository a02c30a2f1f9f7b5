#pragma once

#include <stdexcept>
#include <string>

namespace splatlab {

// Failure categories surfaced by the library. Validation-type failures map to
// CLI exit code 2, I/O failures to exit code 3.
enum class ErrorKind {
  NonOrthonormalRotation,  // rotation fails R^T R = I (det +1) within 1e-9
  NonFiniteValue,          // NaN/Inf in an input that must be finite
  DegenerateScale,         // all camera translations at the origin, no scale
  BehindCamera,            // point/Gaussian at or behind the near plane where disallowed
  InvalidIntrinsics,       // non-positive focal length or image dimensions
  ShapeMismatch,           // image/list dimensions disagree
  EmptyInput,              // an operation got an empty list it cannot handle
  EmptyScene,              // scene with zero Gaussians where rendering requires some
  InvalidDepth,            // depth map has no positive finite entries where required
  InsufficientFrames,      // view selection cannot satisfy counts/interval
  NonPositiveDelta,        // Huber threshold must be > 0
  LengthMismatch,          // paired lists have different lengths
  TooFewViews,             // pairwise camera loss needs at least 2 views
  InvalidConfig,           // bad config value (weights, iteration counts, protocol)
  InvalidQuaternion,       // zero-norm quaternion
  UnnormalizedQuaternion,  // quaternion norm deviates from 1 beyond 1e-9
  NonPositiveDepth,        // depth map entry <= 0 or non-finite
  IoError,                 // file missing/unreadable/unwritable or malformed
  NonFiniteGradient,       // optimizer got a NaN/Inf gradient entry
  TooFewTargets,           // joint optimization needs at least one target view
  MissingOracle,           // oracle-backed expert invoked without ground truth
  ParseError,              // expert/config file exists but does not parse
  TooSmall,                // image smaller than the SSIM window
  EmptyErrorList,          // AUC over an empty error list
  BadK,                    // sample count outside [1, point count]
  HashMismatch,            // provenance input hash disagrees with the inputs
};

inline const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonOrthonormalRotation: return "NonOrthonormalRotation";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::DegenerateScale: return "DegenerateScale";
    case ErrorKind::BehindCamera: return "BehindCamera";
    case ErrorKind::InvalidIntrinsics: return "InvalidIntrinsics";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::EmptyScene: return "EmptyScene";
    case ErrorKind::InvalidDepth: return "InvalidDepth";
    case ErrorKind::InsufficientFrames: return "InsufficientFrames";
    case ErrorKind::NonPositiveDelta: return "NonPositiveDelta";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::TooFewViews: return "TooFewViews";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::InvalidQuaternion: return "InvalidQuaternion";
    case ErrorKind::UnnormalizedQuaternion: return "UnnormalizedQuaternion";
    case ErrorKind::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorKind::TooFewTargets: return "TooFewTargets";
    case ErrorKind::MissingOracle: return "MissingOracle";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::TooSmall: return "TooSmall";
    case ErrorKind::EmptyErrorList: return "EmptyErrorList";
    case ErrorKind::BadK: return "BadK";
    case ErrorKind::HashMismatch: return "HashMismatch";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace splatlab
