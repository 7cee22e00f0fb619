#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace oobnlab {

using VarId = std::size_t;

// Rows of a CPT must sum to one within this tolerance; rows are never renormalized.
inline constexpr double kNormalizationTolerance = 1e-9;

struct Variable {
  std::string name;
  std::vector<std::string> states;

  std::size_t cardinality() const noexcept { return states.size(); }
  std::optional<std::size_t> state_index(std::string_view label) const;

  bool operator==(const Variable&) const = default;
};

struct Edge {
  std::string parent;
  std::string child;

  auto operator<=>(const Edge&) const = default;
};

// One row per parent configuration, last parent varying fastest; one column per child state.
struct Cpt {
  std::string child;
  std::vector<std::string> parents;
  std::vector<std::vector<double>> table;

  bool operator==(const Cpt&) const = default;
};

// Partial (evidence) or total (assignment) map from variable name to state label.
using Evidence = std::map<std::string, std::string, std::less<>>;
using Assignment = Evidence;

// Observed state per variable id, or kUnobserved.
inline constexpr std::size_t kUnobserved = static_cast<std::size_t>(-1);
using StateVector = std::vector<std::size_t>;

// A validated, immutable discrete Bayesian network. Copies are independent
// values; the "with_*" members return modified copies.
class Network {
 public:
  Network() = default;

  // Validates structure and quantification. Throws Error with CycleDetected,
  // CptShapeMismatch, RowNotNormalized, DanglingReference, DuplicateName or
  // InvalidVariable.
  static Network build(std::vector<Variable> variables, const std::vector<Edge>& edges,
                       const std::vector<Cpt>& cpts);

  std::size_t size() const noexcept { return variables_.size(); }
  const std::vector<Variable>& variables() const noexcept { return variables_; }
  const Variable& variable(VarId v) const { return variables_.at(v); }
  const std::string& name(VarId v) const { return variables_.at(v).name; }
  std::size_t cardinality(VarId v) const { return variables_.at(v).cardinality(); }

  std::optional<VarId> find(std::string_view name) const;
  VarId id(std::string_view name) const;  // throws UnknownVariable
  std::size_t state_index(VarId v, std::string_view label) const;  // throws UnknownState

  const std::vector<VarId>& parents(VarId v) const { return parents_.at(v); }
  const std::vector<VarId>& children(VarId v) const { return children_.at(v); }

  std::size_t row_count(VarId v) const { return tables_.at(v).size() / cardinality(v); }
  std::span<const double> table(VarId v) const { return tables_.at(v); }
  std::span<const double> row(VarId v, std::size_t r) const;
  double entry(VarId v, std::size_t r, std::size_t state) const;

  // Row index of a parent configuration given as one state index per parent.
  std::size_t row_index(VarId v, std::span<const std::size_t> parent_states) const;
  std::vector<std::size_t> row_parent_states(VarId v, std::size_t r) const;

  Cpt cpt(VarId v) const;
  std::vector<Cpt> cpts() const;
  // Edges ordered by child declaration order, then by CPT parent order.
  std::vector<Edge> edges() const;

  // Parents before children; ties broken by variable name.
  const std::vector<VarId>& topological_order() const noexcept { return topo_; }

  // Copy with one CPT row replaced. The row must be normalized.
  Network with_row(VarId v, std::size_t r, std::span<const double> values) const;
  Network with_table(VarId v, std::vector<double> flat) const;

  bool operator==(const Network& other) const;

 private:
  std::vector<Variable> variables_;
  std::map<std::string, VarId, std::less<>> index_;
  std::vector<std::vector<VarId>> parents_;
  std::vector<std::vector<VarId>> children_;
  std::vector<std::vector<double>> tables_;
  std::vector<VarId> topo_;
};

// Convenience wrapper around Network::build.
Network build_network(std::vector<Variable> variables, const std::vector<Edge>& edges,
                      const std::vector<Cpt>& cpts);

std::vector<std::string> topological_order(const Network& net);

// Reachability ("Bayes ball") test: true iff every trail between x and y is
// blocked given z. Throws OverlappingSets unless the three sets are disjoint.
bool d_separated(const Network& net, const std::set<std::string>& x, const std::set<std::string>& y,
                 const std::set<std::string>& z);

// Parents, children and the children's other parents.
std::set<std::string> markov_blanket(const Network& net, std::string_view variable);

// Product of the CPT entries selected by a total assignment. Throws PartialAssignment.
double joint_probability(const Network& net, const Assignment& assignment);
double joint_probability(const Network& net, std::span<const std::size_t> states);

// Resolves names and labels; unobserved variables map to kUnobserved.
StateVector resolve_evidence(const Network& net, const Evidence& evidence);

}  // namespace oobnlab
