#pragma once

#include <cstddef>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "oobnlab/network.hpp"

namespace testsupport {

using oobnlab::Evidence;
using oobnlab::Network;

struct RandomNetOptions {
  std::size_t variables = 6;
  std::size_t min_states = 2;
  std::size_t max_states = 3;
  std::size_t max_parents = 3;
  double edge_probability = 0.4;
  // Entries bounded away from zero, so every joint configuration is possible.
  bool strictly_positive = false;
  // Chance that a row is a point mass (only when not strictly positive).
  double deterministic_rows = 0.0;
};

// Random DAG over variables named V00, V01, ... in a random topological order.
Network random_network(std::mt19937_64& rng, const RandomNetOptions& options);

// Random subset of variables observed at random states.
Evidence random_evidence(std::mt19937_64& rng, const Network& net, std::size_t max_findings);

// Full joint over every variable, computed by stepping a mixed-radix counter
// and multiplying table entries. Shares no code with the engine's inference.
class JointOracle {
 public:
  explicit JointOracle(const Network& net);

  std::size_t configurations() const noexcept { return joint_.size(); }
  const std::vector<std::size_t>& assignment(std::size_t k) const { return assignments_[k]; }
  double probability(std::size_t k) const { return joint_[k]; }

  double evidence_probability(const Evidence& evidence) const;
  // Posterior of `variable`; empty when the evidence has probability zero.
  std::vector<double> posterior(const std::string& variable, const Evidence& evidence) const;
  // Unnormalized P(variable = state, evidence) for every state.
  std::vector<double> joint_with(const std::string& variable, const Evidence& evidence) const;
  // Largest |P(x,y|z) - P(x|z)P(y|z)| over all configurations with P(z) > 0.
  double independence_deviation(const std::set<std::string>& x, const std::set<std::string>& y,
                                const std::set<std::string>& z) const;
  // I(X;Y | evidence) in bits, from the pairwise table.
  double mutual_information(const std::string& x, const std::string& y, const Evidence& evidence) const;

 private:
  bool consistent(std::size_t k, const std::vector<std::size_t>& fixed) const;
  std::vector<std::size_t> fixed_states(const Evidence& evidence) const;

  const Network* net_;
  std::vector<std::vector<std::size_t>> assignments_;
  std::vector<double> joint_;
};

// Independent CPT row lookup: parents in declared order, last parent fastest.
std::size_t oracle_row(const Network& net, std::size_t v, const std::vector<std::size_t>& states);

// Largest absolute difference between two equally shaped probability vectors.
double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace testsupport
