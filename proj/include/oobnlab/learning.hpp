#pragma once

#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "oobnlab/discretize.hpp"
#include "oobnlab/network.hpp"

namespace oobnlab {

// Complete discrete records, optionally weighted. Cells hold state indices.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<Variable> columns);

  void add_row(std::span<const std::size_t> states, double weight = 1.0);
  void add_row_labels(std::span<const std::string> labels, double weight = 1.0);

  std::size_t rows() const noexcept { return weights_.size(); }
  std::size_t width() const noexcept { return columns_.size(); }
  const std::vector<Variable>& columns() const noexcept { return columns_; }
  std::size_t column(std::string_view name) const;  // throws MissingColumn
  std::size_t at(std::size_t row, std::size_t col) const { return cells_[row * columns_.size() + col]; }
  std::span<const std::size_t> cells() const noexcept { return cells_; }
  std::span<const double> weights() const noexcept { return weights_; }
  double total_weight() const;

  // Weighted counts of the joint configurations of the given columns, last
  // column fastest.
  std::vector<double> counts(std::span<const std::size_t> cols) const;

 private:
  std::vector<Variable> columns_;
  std::vector<std::size_t> cells_;
  std::vector<double> weights_;
};

// Variables plus fixed edges; the CPT parent order of a child follows the
// order its edges are listed in.
struct Skeleton {
  std::vector<Variable> variables;
  std::vector<Edge> edges;
};

Skeleton skeleton_of(const Network& net);

// Rows are (count + s) / (total + s * cardinality). Throws
// EmptyRowWithoutSmoothing for an unseen parent configuration when s = 0.
std::vector<Cpt> mle_cpts(const Skeleton& structure, const Dataset& data, double smoothing);
Network learn_network(const Skeleton& structure, const Dataset& data, double smoothing);

// Mutual information of the weighted empirical joint, in bits.
double empirical_mutual_information(const Dataset& data, std::string_view x, std::string_view y);

// Maximum-weight spanning tree under empirical mutual information, edges
// directed away from `root`. Equal weights are resolved by the ordered name pair.
Skeleton chow_liu_tree(const Dataset& data, std::string_view root);

// Ancestral sampling in topological order.
Dataset forward_sample(const Network& net, std::size_t n, std::mt19937_64& rng);

// One row per joint configuration, weighted by its probability.
Dataset joint_table(const Network& net);

// Plain comma-separated table with a header row. Quoted fields may contain commas.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;  // throws MissingColumn
};

CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(std::string_view text);

// Parses a nonnegative finite number; throws UnparseableCell or MissingCell
// naming the row and column.
double parse_cell(const std::string& text, std::size_t row, std::string_view column);

// Sidecar format: {"columns": [{"name", "source"?, "states"} | {"name", "source"?, "bins"}]}.
// Categorical columns are matched by label, binned columns are parsed as
// numbers and discretized.
Dataset dataset_from_csv(const CsvTable& csv, const nlohmann::json& sidecar);
Dataset load_dataset(const std::filesystem::path& csv, const std::filesystem::path& sidecar);

}  // namespace oobnlab
