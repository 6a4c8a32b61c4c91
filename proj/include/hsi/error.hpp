#pragma once

#include <stdexcept>
#include <string>

namespace hsi {

enum class ErrorCode {
  // data
  MissingKey,
  UnsupportedDataType,
  BadMagic,
  SizeMismatch,
  UnsupportedDtype,
  FortranOrderUnsupported,
  ShapeRankUnsupported,
  EvenPatchSize,
  DimensionMismatch,
  ClassTooSmall,
  TooManyClasses,
  NonFiniteValue,
  // mlp
  BadArchitecture,
  EmptyTrainingSet,
  // svm
  BadLabel,
  SingleClassInput,
  NonLinearKernel,
  // baselines
  EmptyInput,
  // eval
  LengthMismatch,
  LabelOutOfRange,
  EmptyMatrix,
  ClassOutOfRange,
  NoDefinedClasses,
  // render
  PaletteTooSmall,
  // plumbing
  CorruptModel,
  BadConfig,
  Io,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hsi
