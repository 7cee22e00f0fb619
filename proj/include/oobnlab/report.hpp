#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "oobnlab/bundle.hpp"
#include "oobnlab/stateless.hpp"

namespace oobnlab {

// Report bodies shared verbatim by the CLI and the HTTP service.

enum class Precision { Rounded, Full };

// Rounds every floating-point number to `digits` decimals.
nlohmann::json round_numbers(const nlohmann::json& doc, int digits = 6);
std::string render(const nlohmann::json& doc, Precision precision = Precision::Rounded);

nlohmann::json model_report(const ModelBundle& bundle);
nlohmann::json infer_report(const ModelBundle& bundle, const Evidence& evidence);

struct ScenarioRequest {
  std::optional<std::string> preset;
  Evidence evidence;  // used when no preset is named
  std::optional<std::string> compare;
};

nlohmann::json scenario_report(const ModelBundle& bundle, const ScenarioRequest& request);

struct SensitivityRequest {
  std::string hypothesis;  // "Variable=state"
  std::optional<std::string> scenario;  // preset name; "none" means no evidence
  Evidence evidence;                    // added to the scenario's findings
  bool evidence_sensitivity = false;
  std::size_t top = 20;  // 0 lists every parameter
};

nlohmann::json sensitivity_report(const ModelBundle& bundle, const SensitivityRequest& request);

// Machine-readable diagnostics for every problem found in a bundle document.
std::vector<nlohmann::json> validate_bundle_json(const nlohmann::json& doc);

}  // namespace oobnlab
