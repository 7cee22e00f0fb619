#include "oobnlab/network.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <numeric>
#include <queue>

#include "oobnlab/error.hpp"

namespace oobnlab {

using nlohmann::json;

std::optional<std::size_t> Variable::state_index(std::string_view label) const {
  for (std::size_t i = 0; i < states.size(); ++i)
    if (states[i] == label) return i;
  return std::nullopt;
}

namespace {

void check_row(const std::string& child, std::size_t r, std::span<const double> row) {
  double sum = 0.0;
  for (std::size_t s = 0; s < row.size(); ++s) {
    double p = row[s];
    if (!std::isfinite(p) || p < 0.0 || p > 1.0)
      throw Error(Errc::RowNotNormalized,
                  "CPT of '" + child + "' row " + std::to_string(r) + " has entry outside [0,1]",
                  {{"variable", child}, {"row", r}, {"state", s}, {"value", p}});
    sum += p;
  }
  if (std::abs(sum - 1.0) > kNormalizationTolerance)
    throw Error(Errc::RowNotNormalized,
                "CPT of '" + child + "' row " + std::to_string(r) + " sums to " + std::to_string(sum),
                {{"variable", child}, {"row", r}, {"sum", sum}});
}

// Kahn's algorithm with a name-ordered ready set. Returns fewer than n ids on a cycle.
std::vector<VarId> kahn_order(const std::vector<Variable>& vars,
                              const std::vector<std::vector<VarId>>& parents,
                              const std::vector<std::vector<VarId>>& children) {
  const std::size_t n = vars.size();
  std::vector<std::size_t> indegree(n);
  auto by_name = [&](VarId a, VarId b) { return vars[a].name > vars[b].name; };
  std::priority_queue<VarId, std::vector<VarId>, decltype(by_name)> ready(by_name);
  for (VarId v = 0; v < n; ++v) {
    indegree[v] = parents[v].size();
    if (indegree[v] == 0) ready.push(v);
  }
  std::vector<VarId> order;
  order.reserve(n);
  while (!ready.empty()) {
    VarId v = ready.top();
    ready.pop();
    order.push_back(v);
    for (VarId c : children[v])
      if (--indegree[c] == 0) ready.push(c);
  }
  return order;
}

}  // namespace

Network Network::build(std::vector<Variable> variables, const std::vector<Edge>& edges,
                       const std::vector<Cpt>& cpts) {
  Network net;
  const std::size_t n = variables.size();
  for (VarId v = 0; v < n; ++v) {
    const Variable& var = variables[v];
    if (var.name.empty()) throw Error(Errc::InvalidVariable, "variable with empty name", {{"index", v}});
    if (var.states.size() < 2)
      throw Error(Errc::InvalidVariable, "variable '" + var.name + "' needs at least two states",
                  {{"variable", var.name}});
    std::set<std::string> labels;
    for (const auto& s : var.states) {
      if (s.empty() || !labels.insert(s).second)
        throw Error(Errc::InvalidVariable, "variable '" + var.name + "' has an empty or repeated state '" + s + "'",
                    {{"variable", var.name}, {"state", s}});
    }
    if (!net.index_.emplace(var.name, v).second)
      throw Error(Errc::DuplicateName, "variable '" + var.name + "' declared twice", {{"variable", var.name}});
  }
  net.variables_ = std::move(variables);

  std::vector<std::set<VarId>> edge_parents(n);
  net.children_.assign(n, {});
  std::set<std::pair<VarId, VarId>> seen;
  for (const Edge& e : edges) {
    auto p = net.find(e.parent);
    auto c = net.find(e.child);
    if (!p || !c)
      throw Error(Errc::DanglingReference, "edge " + e.parent + " -> " + e.child + " references an unknown variable",
                  {{"edge", {e.parent, e.child}}});
    if (*p == *c)
      throw Error(Errc::CycleDetected, "self loop on '" + e.parent + "'", {{"cycle", {e.parent}}});
    if (!seen.emplace(*p, *c).second)
      throw Error(Errc::DuplicateName, "edge " + e.parent + " -> " + e.child + " declared twice",
                  {{"edge", {e.parent, e.child}}});
    edge_parents[*c].insert(*p);
    net.children_[*p].push_back(*c);
  }

  // Provisional parent lists (edge order) for the cycle check; CPT order replaces them below.
  net.parents_.assign(n, {});
  for (VarId v = 0; v < n; ++v) net.parents_[v].assign(edge_parents[v].begin(), edge_parents[v].end());
  auto order = kahn_order(net.variables_, net.parents_, net.children_);
  if (order.size() != n) {
    std::vector<bool> placed(n, false);
    for (VarId v : order) placed[v] = true;
    json cycle = json::array();
    for (VarId v = 0; v < n; ++v)
      if (!placed[v]) cycle.push_back(net.variables_[v].name);
    throw Error(Errc::CycleDetected, "edge relation contains a directed cycle", {{"nodes", cycle}});
  }

  std::vector<const Cpt*> by_child(n, nullptr);
  for (const Cpt& cpt : cpts) {
    auto c = net.find(cpt.child);
    if (!c)
      throw Error(Errc::DanglingReference, "CPT for unknown variable '" + cpt.child + "'", {{"variable", cpt.child}});
    if (by_child[*c])
      throw Error(Errc::DuplicateName, "variable '" + cpt.child + "' has more than one CPT", {{"variable", cpt.child}});
    by_child[*c] = &cpt;
  }

  net.tables_.assign(n, {});
  for (VarId v = 0; v < n; ++v) {
    const std::string& name = net.variables_[v].name;
    const Cpt* cpt = by_child[v];
    if (!cpt) throw Error(Errc::CptShapeMismatch, "variable '" + name + "' has no CPT", {{"variable", name}});
    std::vector<VarId> ordered;
    std::set<VarId> listed;
    for (const auto& pname : cpt->parents) {
      auto p = net.find(pname);
      if (!p)
        throw Error(Errc::DanglingReference, "CPT of '" + name + "' names unknown parent '" + pname + "'",
                    {{"variable", name}, {"parent", pname}});
      if (!listed.insert(*p).second)
        throw Error(Errc::CptShapeMismatch, "CPT of '" + name + "' repeats parent '" + pname + "'",
                    {{"variable", name}, {"parent", pname}});
      ordered.push_back(*p);
    }
    if (listed != edge_parents[v]) {
      json declared = json::array();
      for (VarId p : edge_parents[v]) declared.push_back(net.variables_[p].name);
      throw Error(Errc::CptShapeMismatch, "CPT parents of '" + name + "' differ from its graph parents",
                  {{"variable", name}, {"cpt_parents", cpt->parents}, {"graph_parents", declared}});
    }
    net.parents_[v] = std::move(ordered);

    std::size_t rows = 1;
    for (VarId p : net.parents_[v]) rows *= net.variables_[p].cardinality();
    const std::size_t cols = net.variables_[v].cardinality();
    if (cpt->table.size() != rows)
      throw Error(Errc::CptShapeMismatch,
                  "CPT of '" + name + "' has " + std::to_string(cpt->table.size()) + " rows, expected " +
                      std::to_string(rows),
                  {{"variable", name}, {"rows", cpt->table.size()}, {"expected_rows", rows}});
    auto& flat = net.tables_[v];
    flat.reserve(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
      const auto& row = cpt->table[r];
      if (row.size() != cols)
        throw Error(Errc::CptShapeMismatch,
                    "CPT of '" + name + "' row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                        " columns, expected " + std::to_string(cols),
                    {{"variable", name}, {"row", r}, {"columns", row.size()}, {"expected_columns", cols}});
      check_row(name, r, row);
      flat.insert(flat.end(), row.begin(), row.end());
    }
  }

  for (auto& ch : net.children_) std::sort(ch.begin(), ch.end());
  net.topo_ = std::move(order);
  return net;
}

std::optional<VarId> Network::find(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

VarId Network::id(std::string_view name) const {
  auto v = find(name);
  if (!v) throw Error(Errc::UnknownVariable, "unknown variable '" + std::string(name) + "'", {{"variable", name}});
  return *v;
}

std::size_t Network::state_index(VarId v, std::string_view label) const {
  auto s = variables_.at(v).state_index(label);
  if (!s)
    throw Error(Errc::UnknownState, "variable '" + name(v) + "' has no state '" + std::string(label) + "'",
                {{"variable", name(v)}, {"state", label}, {"states", variables_[v].states}});
  return *s;
}

std::span<const double> Network::row(VarId v, std::size_t r) const {
  const std::size_t k = cardinality(v);
  return std::span<const double>(tables_.at(v)).subspan(r * k, k);
}

double Network::entry(VarId v, std::size_t r, std::size_t state) const {
  return tables_.at(v).at(r * cardinality(v) + state);
}

std::size_t Network::row_index(VarId v, std::span<const std::size_t> parent_states) const {
  const auto& ps = parents_.at(v);
  if (parent_states.size() != ps.size())
    throw Error(Errc::InvalidArgument, "parent configuration of '" + name(v) + "' has wrong length");
  std::size_t r = 0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (parent_states[i] >= cardinality(ps[i]))
      throw Error(Errc::InvalidArgument, "parent state index out of range for '" + name(v) + "'");
    r = r * cardinality(ps[i]) + parent_states[i];
  }
  return r;
}

std::vector<std::size_t> Network::row_parent_states(VarId v, std::size_t r) const {
  const auto& ps = parents_.at(v);
  std::vector<std::size_t> states(ps.size());
  for (std::size_t i = ps.size(); i-- > 0;) {
    states[i] = r % cardinality(ps[i]);
    r /= cardinality(ps[i]);
  }
  return states;
}

Cpt Network::cpt(VarId v) const {
  Cpt out;
  out.child = name(v);
  for (VarId p : parents_.at(v)) out.parents.push_back(name(p));
  for (std::size_t r = 0; r < row_count(v); ++r) {
    auto rw = row(v, r);
    out.table.emplace_back(rw.begin(), rw.end());
  }
  return out;
}

std::vector<Cpt> Network::cpts() const {
  std::vector<Cpt> out;
  out.reserve(size());
  for (VarId v = 0; v < size(); ++v) out.push_back(cpt(v));
  return out;
}

std::vector<Edge> Network::edges() const {
  std::vector<Edge> out;
  for (VarId v = 0; v < size(); ++v)
    for (VarId p : parents_[v]) out.push_back({name(p), name(v)});
  return out;
}

Network Network::with_row(VarId v, std::size_t r, std::span<const double> values) const {
  if (values.size() != cardinality(v) || r >= row_count(v))
    throw Error(Errc::CptShapeMismatch, "replacement row for '" + name(v) + "' has the wrong shape");
  check_row(name(v), r, values);
  Network copy = *this;
  std::copy(values.begin(), values.end(), copy.tables_[v].begin() + static_cast<std::ptrdiff_t>(r * cardinality(v)));
  return copy;
}

Network Network::with_table(VarId v, std::vector<double> flat) const {
  if (flat.size() != tables_.at(v).size())
    throw Error(Errc::CptShapeMismatch, "replacement table for '" + name(v) + "' has the wrong size");
  const std::size_t k = cardinality(v);
  for (std::size_t r = 0; r < flat.size() / k; ++r) check_row(name(v), r, std::span<const double>(flat).subspan(r * k, k));
  Network copy = *this;
  copy.tables_[v] = std::move(flat);
  return copy;
}

bool Network::operator==(const Network& other) const {
  return variables_ == other.variables_ && parents_ == other.parents_ && tables_ == other.tables_;
}

Network build_network(std::vector<Variable> variables, const std::vector<Edge>& edges, const std::vector<Cpt>& cpts) {
  return Network::build(std::move(variables), edges, cpts);
}

std::vector<std::string> topological_order(const Network& net) {
  std::vector<std::string> out;
  out.reserve(net.size());
  for (VarId v : net.topological_order()) out.push_back(net.name(v));
  return out;
}

bool d_separated(const Network& net, const std::set<std::string>& x, const std::set<std::string>& y,
                 const std::set<std::string>& z) {
  auto resolve = [&](const std::set<std::string>& names) {
    std::vector<bool> mask(net.size(), false);
    for (const auto& n : names) mask[net.id(n)] = true;
    return mask;
  };
  auto in_x = resolve(x), in_y = resolve(y), in_z = resolve(z);
  for (VarId v = 0; v < net.size(); ++v) {
    if ((in_x[v] && in_y[v]) || (in_x[v] && in_z[v]) || (in_y[v] && in_z[v]))
      throw Error(Errc::OverlappingSets, "variable '" + net.name(v) + "' appears in more than one set",
                  {{"variable", net.name(v)}});
  }

  // Ancestors of Z (including Z) decide whether a collider is opened.
  std::vector<bool> anc_z(net.size(), false);
  std::deque<VarId> work;
  for (VarId v = 0; v < net.size(); ++v)
    if (in_z[v]) work.push_back(v);
  while (!work.empty()) {
    VarId v = work.front();
    work.pop_front();
    if (anc_z[v]) continue;
    anc_z[v] = true;
    for (VarId p : net.parents(v)) work.push_back(p);
  }

  // Traversal states: (node, arrived from a child = going up) / (arrived from a parent = going down).
  enum Dir : int { kUp = 0, kDown = 1 };
  std::vector<std::array<bool, 2>> visited(net.size(), {false, false});
  std::deque<std::pair<VarId, Dir>> queue;
  for (VarId v = 0; v < net.size(); ++v)
    if (in_x[v]) queue.emplace_back(v, kUp);
  while (!queue.empty()) {
    auto [v, dir] = queue.front();
    queue.pop_front();
    if (visited[v][dir]) continue;
    visited[v][dir] = true;
    if (!in_z[v] && in_y[v]) return false;
    if (dir == kUp && !in_z[v]) {
      for (VarId p : net.parents(v)) queue.emplace_back(p, kUp);
      for (VarId c : net.children(v)) queue.emplace_back(c, kDown);
    } else if (dir == kDown) {
      if (!in_z[v])
        for (VarId c : net.children(v)) queue.emplace_back(c, kDown);
      if (anc_z[v])
        for (VarId p : net.parents(v)) queue.emplace_back(p, kUp);
    }
  }
  return true;
}

std::set<std::string> markov_blanket(const Network& net, std::string_view variable) {
  VarId x = net.id(variable);
  std::set<VarId> blanket;
  for (VarId p : net.parents(x)) blanket.insert(p);
  for (VarId c : net.children(x)) {
    blanket.insert(c);
    for (VarId cp : net.parents(c)) blanket.insert(cp);
  }
  blanket.erase(x);
  std::set<std::string> out;
  for (VarId v : blanket) out.insert(net.name(v));
  return out;
}

StateVector resolve_evidence(const Network& net, const Evidence& evidence) {
  StateVector states(net.size(), kUnobserved);
  for (const auto& [name, label] : evidence) {
    VarId v = net.id(name);
    states[v] = net.state_index(v, label);
  }
  return states;
}

double joint_probability(const Network& net, std::span<const std::size_t> states) {
  if (states.size() != net.size()) throw Error(Errc::PartialAssignment, "assignment length differs from network size");
  double p = 1.0;
  std::vector<std::size_t> config;
  for (VarId v = 0; v < net.size(); ++v) {
    if (states[v] == kUnobserved)
      throw Error(Errc::PartialAssignment, "variable '" + net.name(v) + "' is unassigned", {{"variable", net.name(v)}});
    config.clear();
    for (VarId pa : net.parents(v)) config.push_back(states[pa]);
    p *= net.entry(v, net.row_index(v, config), states[v]);
  }
  return p;
}

double joint_probability(const Network& net, const Assignment& assignment) {
  return joint_probability(net, resolve_evidence(net, assignment));
}

}  // namespace oobnlab
