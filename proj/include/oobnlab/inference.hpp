#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oobnlab/kernels.hpp"
#include "oobnlab/network.hpp"

namespace oobnlab {

struct Posterior {
  std::string variable;
  std::vector<std::string> states;
  std::vector<double> probabilities;

  double at(std::string_view state) const;
};

// Brute-force enumeration refuses networks larger than this.
inline constexpr std::size_t kMaxEnumerationVariables = 24;
inline constexpr std::size_t kMaxEnumerationStates = std::size_t{1} << 28;

struct EliminationStats {
  std::size_t max_factor_scope = 0;  // largest product formed during elimination
  std::vector<VarId> order;          // variables actually summed out
};

// Unnormalized P(targets, evidence) as a factor over `targets` (in the given
// order). Variables that are not ancestors of a target or an observed variable
// are pruned before elimination. When `order` is given it is used for the
// variables it names; the remaining hidden variables follow by min-fill.
Factor evidence_joint(const Network& net, std::span<const VarId> targets, const StateVector& evidence,
                      const std::vector<VarId>* order = nullptr, EliminationStats* stats = nullptr);

// Exact posterior by variable elimination. An observed target yields a point mass.
// Throws ZeroProbabilityEvidence when P(evidence) = 0.
Posterior marginal(const Network& net, std::string_view target, const Evidence& evidence);
Posterior marginal(const Network& net, VarId target, const StateVector& evidence,
                   const std::vector<VarId>* order = nullptr);

// P(evidence); 1 for empty evidence, 0 is a valid result.
double probability_of_evidence(const Network& net, const Evidence& evidence);
double probability_of_evidence(const Network& net, const StateVector& evidence);

std::map<std::string, Posterior> posterior_all(const Network& net, const Evidence& evidence);
std::vector<Posterior> posterior_all(const Network& net, const StateVector& evidence,
                                     const std::vector<VarId>* order = nullptr);

// Greedy min-fill order over the hidden variables of the pruned query graph,
// ties broken by name.
std::vector<std::string> elimination_order(const Network& net, const std::set<std::string>& targets,
                                           const Evidence& evidence);

// Full joint enumeration; the test oracle for everything above.
Posterior brute_force_marginal(const Network& net, std::string_view target, const Evidence& evidence);
double brute_force_probability_of_evidence(const Network& net, const Evidence& evidence);
std::map<std::string, Posterior> brute_force_posterior_all(const Network& net, const Evidence& evidence);

}  // namespace oobnlab
