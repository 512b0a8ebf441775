#include "clotkit/errors.hpp"

namespace clotkit {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::DuplicateImageId: return "DuplicateImageId";
    case Errc::DuplicateImageNum: return "DuplicateImageNum";
    case Errc::IllegalLabelForKind: return "IllegalLabelForKind";
    case Errc::EmptyIndex: return "EmptyIndex";
    case Errc::TooFewPatients: return "TooFewPatients";
    case Errc::UnsupportedFormat: return "UnsupportedFormat";
    case Errc::CorruptFile: return "CorruptFile";
    case Errc::EmptyImage: return "EmptyImage";
    case Errc::InvalidParams: return "InvalidParams";
    case Errc::NonFiniteInput: return "NonFiniteInput";
    case Errc::ClassAbsent: return "ClassAbsent";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::NonFiniteGradient: return "NonFiniteGradient";
    case Errc::SubjectCollision: return "SubjectCollision";
    case Errc::SubjectSetMismatch: return "SubjectSetMismatch";
    case Errc::IoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace clotkit
