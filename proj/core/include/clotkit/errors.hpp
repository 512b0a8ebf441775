#pragma once

#include <stdexcept>
#include <string>

namespace clotkit {

enum class Errc {
  // metadata / dataset
  MissingColumn,
  DuplicateImageId,
  DuplicateImageNum,
  IllegalLabelForKind,
  EmptyIndex,
  TooFewPatients,
  // raster I/O and preprocessing
  UnsupportedFormat,
  CorruptFile,
  EmptyImage,
  // augmentation
  InvalidParams,
  // metrics
  NonFiniteInput,
  ClassAbsent,
  // trainer
  ShapeMismatch,
  NonFiniteGradient,
  // predictions
  SubjectCollision,
  SubjectSetMismatch,
  // generic
  IoError,
};

const char* errc_name(Errc code) noexcept;

/// Exception carrying a machine-checkable error code alongside the message.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace clotkit
