#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "oobnlab/bundle.hpp"
#include "oobnlab/inference.hpp"
#include "oobnlab/learning.hpp"

namespace oobnlab {

inline constexpr const char* kStatelessModelName = "stateless-ethereum";

struct InventoryEntry {
  const char* template_name;
  const char* name;
  NodeRole role;
  std::vector<std::string> states;
  bool continuous;
};

// The fixed variable inventory of the Stateless Ethereum model (18 variables).
const std::vector<InventoryEntry>& stateless_inventory();

// Throws InventoryMismatch when the flattened model deviates from the inventory.
void check_stateless_inventory(const ModelBundle& bundle);

// Columns every block/witness extract must carry.
const std::vector<std::string>& block_witness_columns();

// Reads the block/witness CSV and discretizes it with the bins recorded in the
// bundle metadata. Throws MissingColumn, MissingCell, UnparseableCell.
Dataset ingest_block_witness_csv(const std::filesystem::path& path, const ModelBundle& bundle);
Dataset ingest_block_witness_csv(const CsvTable& csv, const ModelBundle& bundle);

struct LearnedCpt {
  std::string template_name;
  std::string node;
  std::size_t rows = 0;
};

struct LearnResult {
  ModelBundle bundle;
  std::vector<LearnedCpt> learned;
  std::size_t records = 0;
  double smoothing = 1.0;
};

// Re-estimates every CPT tagged `learned` whose family is covered by the
// dataset and regenerates the deterministic sum nodes.
LearnResult learn_bundle(const ModelBundle& bundle, const Dataset& data, double smoothing = 1.0);

struct Headline {
  std::string label;
  std::string variable;  // flat name
  std::string state;
  double value = 0.0;
};

struct ScenarioResult {
  std::string name;      // preset name, or "custom"
  Evidence given;        // as supplied
  Evidence evidence;     // resolved to flat names
  double probability_of_evidence = 1.0;
  std::vector<Posterior> posteriors;
  std::vector<Headline> headlines;
};

// Throws UnknownPreset or ZeroProbabilityEvidence.
ScenarioResult run_scenario(const ModelBundle& bundle, std::string_view preset);
ScenarioResult run_evidence(const ModelBundle& bundle, const Evidence& evidence, std::string name = "custom");

struct HeadlineChange {
  std::string label;
  double baseline = 0.0;
  double value = 0.0;
  double absolute = 0.0;
  std::optional<double> relative;  // (value - baseline) / baseline; none when baseline is 0
};

std::vector<HeadlineChange> compare(const ScenarioResult& result, const ScenarioResult& baseline);

}  // namespace oobnlab
