#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oobnlab/bundle.hpp"
#include "oobnlab/sensitivity.hpp"

namespace oobnlab {

struct CalibrationOptions {
  std::size_t max_sweeps = 200;
  double lower = 0.001;  // moved cells stay inside [lower, upper]
  double upper = 0.999;
  // Stop once every fitted residual is within this fraction of its tolerance.
  double settle = 0.1;
  // Each moved cell adds anchor * ((t - elicited) / 0.1)^2 to the loss, which
  // keeps the fit close to the expert starting point.
  double anchor = 0.01;
  // Stop when a sweep lowers the loss by less than this relative amount.
  double min_improvement = 1e-6;
  // Flat-network cells to optimize; empty means every cell of a CPT tagged
  // `elicited` whose template is instantiated exactly once.
  std::vector<ParameterRef> free_cells;
};

struct TargetOutcome {
  CalibrationTarget target;
  double before = 0.0;
  double after = 0.0;
  std::optional<double> beta_before;  // sensitivity-function targets report both coefficients
  std::optional<double> beta_after;
  bool met = false;
  bool influenced = false;  // some free cell moves this quantity
};

struct CalibrationReport {
  std::size_t sweeps = 0;
  bool converged = false;
  bool all_met = false;
  std::size_t free_cells = 0;
  std::size_t moved_cells = 0;
  std::vector<TargetOutcome> targets;
  std::vector<std::string> infeasible;  // fitted targets no free cell can move
  std::vector<std::string> unmet;

  nlohmann::json to_json() const;
};

struct CalibrationResult {
  ModelBundle bundle;
  CalibrationReport report;
};

// Coordinate descent over free cells. Each step takes the closed-form
// sensitivity function of every fitted target in one cell and minimizes
// sum(((f_k(t) - v_k) / tol_k)^2) plus the anchor penalty over t. Touched CPTs are re-tagged
// `calibrated`; learned and deterministic CPTs never change.
CalibrationResult calibrate(const ModelBundle& bundle, const std::vector<CalibrationTarget>& targets,
                            const CalibrationOptions& options = {});
CalibrationResult calibrate(const ModelBundle& bundle, const CalibrationOptions& options = {});

// Current value of a target on a flat network built from `bundle`.
double evaluate_target(const ModelBundle& bundle, const Network& net, const CalibrationTarget& target);
SensitivityFunction target_sensitivity_function(const ModelBundle& bundle, const Network& net,
                                                const CalibrationTarget& target);

// Flat-network reference of a cell named by parent labels.
ParameterRef parameter_ref(const Network& net, const std::string& variable, const Assignment& parents,
                           const std::string& state);

}  // namespace oobnlab
