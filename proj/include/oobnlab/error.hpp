#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace oobnlab {

// Every failure the engine reports carries one of these codes. The names are
// part of the machine-readable diagnostics emitted by the CLI and service.
enum class Errc {
  CycleDetected,
  CptShapeMismatch,
  RowNotNormalized,
  DanglingReference,
  DuplicateName,
  InvalidVariable,
  UnknownVariable,
  UnknownState,
  AmbiguousName,
  OverlappingSets,
  PartialAssignment,
  TooLargeForEnumeration,
  ZeroProbabilityEvidence,
  InputHasCpt,
  OutputMissingCpt,
  UnknownTemplateReference,
  TemplateCycle,
  SignatureMismatch,
  UnboundInput,
  NameCollision,
  NotAnOutput,
  MissingStandInPrior,
  DegenerateRow,
  HypothesisObserved,
  EmptyRowWithoutSmoothing,
  SchemaError,
  InventoryMismatch,
  NonMonotoneBins,
  UnitMismatch,
  SumOutOfRange,
  MissingColumn,
  UnparseableCell,
  MissingCell,
  UnknownPreset,
  InvalidArgument,
  IoError,
  CalibrationFailed,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, nlohmann::json detail = nlohmann::json::object());

  Errc code() const noexcept { return code_; }
  const nlohmann::json& detail() const noexcept { return detail_; }

  // {"error": "<Code>", "message": ..., "detail": {...}}
  nlohmann::json to_json() const;

 private:
  Errc code_;
  nlohmann::json detail_;
};

}  // namespace oobnlab
