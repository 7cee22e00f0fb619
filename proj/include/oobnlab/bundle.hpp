#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oobnlab/discretize.hpp"
#include "oobnlab/oobn.hpp"

namespace oobnlab {

struct Preset {
  std::string name;
  std::string description;
  Evidence evidence;
  // Expected direction of change against the empty-evidence run, e.g.
  // {"NodeKeepsUpWithHeadOfChain=yes": "down"}.
  std::map<std::string, std::string> expect;
};

enum class TargetKind { Posterior, EvidenceProbability, SensitivityFunction };

struct ParameterSpec {
  std::string variable;
  Assignment parents;
  std::string state;
};

// A published number the quantification should reproduce. Evidence is the
// named preset's evidence plus `evidence`.
struct CalibrationTarget {
  std::string id;
  TargetKind kind = TargetKind::Posterior;
  std::string variable;  // query variable (Posterior, SensitivityFunction)
  std::string state;
  std::string preset;
  Evidence evidence;
  double value = 0.0;  // expected posterior / probability / alpha
  double beta = 0.0;   // SensitivityFunction only
  std::optional<ParameterSpec> parameter;
  double tolerance = 0.0;
  bool fit = true;  // false: reported for reference, never optimized
  std::string note;
};

struct DeterministicSum {
  std::string template_name;
  std::string node;
  std::vector<std::string> operands;  // two local names inside the template
};

// Per-variable metadata keyed by local node name.
struct VariableMeta {
  std::string submodel;
  bool ordinal = false;
  std::optional<BinSpec> bins;
  std::string source_column;  // CSV column when learned from block/witness data
};

struct ModelBundle {
  TemplateLibrary library;
  std::string top;
  nlohmann::json metadata = nlohmann::json::object();
  std::map<std::string, VariableMeta> variables;
  std::vector<DeterministicSum> sums;
  std::vector<Preset> presets;
  std::vector<CalibrationTarget> targets;
  FlatModel flat;

  const Network& network() const noexcept { return flat.network; }
  const Preset& preset(std::string_view name) const;  // throws UnknownPreset
  // Preset evidence (plus extra findings) with names resolved to flat names.
  Evidence scenario_evidence(std::string_view preset_name, const Evidence& extra = {}) const;
};

// Parses, validates against the OOBN rules, flattens and, for the
// "stateless-ethereum" model, checks the fixed variable inventory.
ModelBundle bundle_from_json(const nlohmann::json& doc);
nlohmann::json bundle_to_json(const ModelBundle& bundle);
ModelBundle load_bundle(const std::filesystem::path& path);
void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path);

// Rebuilds the flat model after the library changed.
ModelBundle with_library(const ModelBundle& bundle, TemplateLibrary library);

// Resolves a variable name against a flat network: exact match, else the
// unique variable whose name ends in "." + name. Throws UnknownVariable or
// AmbiguousName.
std::string resolve_name(const Network& net, std::string_view name);
Evidence resolve_names(const Network& net, const Evidence& evidence);

// Parses "Variable=state".
std::pair<std::string, std::string> parse_finding(std::string_view text);

// 64-bit FNV-1a of the canonical JSON serialization, as 16 hex digits.
std::string model_hash(const ModelBundle& bundle);

nlohmann::json target_to_json(const CalibrationTarget& t);
CalibrationTarget target_from_json(const nlohmann::json& j);

}  // namespace oobnlab
