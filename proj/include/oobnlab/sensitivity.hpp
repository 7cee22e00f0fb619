#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oobnlab/network.hpp"

namespace oobnlab {

// One CPT cell: P(variable = state | parents = parent configuration `row`).
struct ParameterRef {
  std::string variable;
  std::size_t row = 0;
  std::string state;

  auto operator<=>(const ParameterRef&) const = default;
};

struct Hypothesis {
  std::string variable;
  std::string state;
};

// Posterior of the hypothesis as (alpha*t + beta) / (gamma*t + delta) in one
// parameter t, other entries of its row co-varied proportionally.
struct SensitivityFunction {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double delta = 1.0;
  double t0 = 0.0;
  Hypothesis hypothesis;
  Evidence evidence;
  ParameterRef parameter;

  double operator()(double t) const { return (alpha * t + beta) / (gamma * t + delta); }
  double derivative(double t) const;
};

// Every cell of every CPT, in variable, row, state order.
std::vector<ParameterRef> all_parameters(const Network& net);

// Resolves the parent configuration of a parameter as labels.
Assignment parent_configuration(const Network& net, const ParameterRef& ref);

// Sets entry `state` of a row to t and rescales the others by (1-t)/(1-t0).
// Throws DegenerateRow when the other entries are all zero and t != 1.
std::vector<double> covary_row(std::span<const double> row, std::size_t state, double t);
Network covary_cpt_row(const Network& net, const ParameterRef& ref, double t);

SensitivityFunction sensitivity_function(const Network& net, const Hypothesis& hypothesis, const Evidence& evidence,
                                         const ParameterRef& ref);

// |f'(t0)|.
double sensitivity_value(const SensitivityFunction& sf);

struct RankedParameter {
  SensitivityFunction function;
  double value = 0.0;
};

// Descending by sensitivity value, ties by (variable, row, state). Degenerate
// rows (t0 = 1 with nothing to co-vary) are skipped. An empty candidate list
// means every CPT cell.
std::vector<RankedParameter> rank_parameters(const Network& net, const Hypothesis& hypothesis,
                                             const Evidence& evidence, std::vector<ParameterRef> candidates = {});

struct EvidenceSensitivityRange {
  std::string variable;
  double min_posterior = 0.0;
  double max_posterior = 0.0;
  double current = 0.0;
  std::string min_state;
  std::string max_state;

  double width() const { return max_posterior - min_posterior; }
};

// Range of P(hypothesis | evidence, V = v) over the states v of each unobserved
// variable V, ordered by width (descending, then name).
std::vector<EvidenceSensitivityRange> evidence_sensitivity_ranges(const Network& net, const Hypothesis& hypothesis,
                                                                  const Evidence& evidence);

// Information metrics in bits.
double entropy(const Network& net, std::string_view variable, const Evidence& evidence);
double mutual_information(const Network& net, std::string_view x, std::string_view y, const Evidence& evidence);
double entropy_of(std::span<const double> distribution);

nlohmann::json to_json(const ParameterRef& ref, const Network& net);
nlohmann::json to_json(const RankedParameter& p, const Network& net);
nlohmann::json to_json(const EvidenceSensitivityRange& r);

}  // namespace oobnlab
