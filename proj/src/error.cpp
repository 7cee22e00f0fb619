#include "oobnlab/error.hpp"

namespace oobnlab {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::CycleDetected: return "CycleDetected";
    case Errc::CptShapeMismatch: return "CptShapeMismatch";
    case Errc::RowNotNormalized: return "RowNotNormalized";
    case Errc::DanglingReference: return "DanglingReference";
    case Errc::DuplicateName: return "DuplicateName";
    case Errc::InvalidVariable: return "InvalidVariable";
    case Errc::UnknownVariable: return "UnknownVariable";
    case Errc::UnknownState: return "UnknownState";
    case Errc::AmbiguousName: return "AmbiguousName";
    case Errc::OverlappingSets: return "OverlappingSets";
    case Errc::PartialAssignment: return "PartialAssignment";
    case Errc::TooLargeForEnumeration: return "TooLargeForEnumeration";
    case Errc::ZeroProbabilityEvidence: return "ZeroProbabilityEvidence";
    case Errc::InputHasCpt: return "InputHasCpt";
    case Errc::OutputMissingCpt: return "OutputMissingCpt";
    case Errc::UnknownTemplateReference: return "UnknownTemplateReference";
    case Errc::TemplateCycle: return "TemplateCycle";
    case Errc::SignatureMismatch: return "SignatureMismatch";
    case Errc::UnboundInput: return "UnboundInput";
    case Errc::NameCollision: return "NameCollision";
    case Errc::NotAnOutput: return "NotAnOutput";
    case Errc::MissingStandInPrior: return "MissingStandInPrior";
    case Errc::DegenerateRow: return "DegenerateRow";
    case Errc::HypothesisObserved: return "HypothesisObserved";
    case Errc::EmptyRowWithoutSmoothing: return "EmptyRowWithoutSmoothing";
    case Errc::SchemaError: return "SchemaError";
    case Errc::InventoryMismatch: return "InventoryMismatch";
    case Errc::NonMonotoneBins: return "NonMonotoneBins";
    case Errc::UnitMismatch: return "UnitMismatch";
    case Errc::SumOutOfRange: return "SumOutOfRange";
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::UnparseableCell: return "UnparseableCell";
    case Errc::MissingCell: return "MissingCell";
    case Errc::UnknownPreset: return "UnknownPreset";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::IoError: return "IoError";
    case Errc::CalibrationFailed: return "CalibrationFailed";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message, nlohmann::json detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      detail_(std::move(detail)) {}

nlohmann::json Error::to_json() const {
  return {{"error", std::string(to_string(code_))}, {"message", what()}, {"detail", detail_}};
}

}  // namespace oobnlab
