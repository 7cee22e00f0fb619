#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

namespace testsupport {

using oobnlab::Cpt;
using oobnlab::Edge;
using oobnlab::Variable;

namespace {

std::vector<double> random_row(std::mt19937_64& rng, std::size_t k, const RandomNetOptions& o) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> row(k);
  if (!o.strictly_positive && o.deterministic_rows > 0.0 && u(rng) < o.deterministic_rows) {
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    row[pick(rng)] = 1.0;
    return row;
  }
  const double floor = o.strictly_positive ? 0.05 : 0.0;
  double sum = 0.0;
  for (auto& x : row) {
    x = floor + u(rng);
    // Occasional exact zeros exercise zero-probability paths.
    if (!o.strictly_positive && u(rng) < 0.05) x = 0.0;
    sum += x;
  }
  if (sum == 0.0) {
    row[0] = 1.0;
    return row;
  }
  for (auto& x : row) x /= sum;
  const double head = std::accumulate(row.begin(), row.end() - 1, 0.0);
  row.back() = std::max(0.0, 1.0 - head);
  return row;
}

}  // namespace

Network random_network(std::mt19937_64& rng, const RandomNetOptions& o) {
  const std::size_t n = o.variables;
  std::uniform_int_distribution<std::size_t> card(o.min_states, o.max_states);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);

  std::vector<Variable> vars(n);
  for (std::size_t i = 0; i < n; ++i) {
    char name[8];
    std::snprintf(name, sizeof name, "V%02zu", i);
    vars[i].name = name;
    const std::size_t k = card(rng);
    for (std::size_t s = 0; s < k; ++s) vars[i].states.push_back("s" + std::to_string(s));
  }

  // perm[i] is the i-th variable in topological order.
  std::vector<Edge> edges;
  std::vector<std::vector<std::size_t>> parents(n);
  for (std::size_t i = 1; i < n; ++i) {
    std::vector<std::size_t> earlier(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(i));
    std::shuffle(earlier.begin(), earlier.end(), rng);
    for (std::size_t p : earlier) {
      if (parents[perm[i]].size() >= o.max_parents) break;
      if (u(rng) < o.edge_probability) {
        parents[perm[i]].push_back(p);
        edges.push_back({vars[p].name, vars[perm[i]].name});
      }
    }
  }

  std::vector<Cpt> cpts;
  for (std::size_t v = 0; v < n; ++v) {
    Cpt c;
    c.child = vars[v].name;
    std::size_t rows = 1;
    for (std::size_t p : parents[v]) {
      c.parents.push_back(vars[p].name);
      rows *= vars[p].states.size();
    }
    for (std::size_t r = 0; r < rows; ++r) c.table.push_back(random_row(rng, vars[v].states.size(), o));
    cpts.push_back(std::move(c));
  }
  return Network::build(std::move(vars), edges, cpts);
}

Evidence random_evidence(std::mt19937_64& rng, const Network& net, std::size_t max_findings) {
  std::vector<std::size_t> ids(net.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::shuffle(ids.begin(), ids.end(), rng);
  std::uniform_int_distribution<std::size_t> count(0, std::min(max_findings, net.size()));
  Evidence ev;
  const std::size_t m = count(rng);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& var = net.variable(ids[i]);
    std::uniform_int_distribution<std::size_t> s(0, var.states.size() - 1);
    ev[var.name] = var.states[s(rng)];
  }
  return ev;
}

std::size_t oracle_row(const Network& net, std::size_t v, const std::vector<std::size_t>& states) {
  std::size_t row = 0;
  for (std::size_t p : net.parents(v)) row = row * net.cardinality(p) + states[p];
  return row;
}

JointOracle::JointOracle(const Network& net) : net_(&net) {
  const std::size_t n = net.size();
  std::vector<std::size_t> x(n, 0);
  while (true) {
    double p = 1.0;
    for (std::size_t v = 0; v < n; ++v) p *= net.table(v)[oracle_row(net, v, x) * net.cardinality(v) + x[v]];
    assignments_.push_back(x);
    joint_.push_back(p);
    std::size_t i = n;
    while (i > 0) {
      --i;
      if (++x[i] < net.cardinality(i)) break;
      x[i] = 0;
      if (i == 0) return;
    }
    if (n == 0) return;
  }
}

std::vector<std::size_t> JointOracle::fixed_states(const Evidence& evidence) const {
  std::vector<std::size_t> fixed(net_->size(), oobnlab::kUnobserved);
  for (const auto& [name, label] : evidence) {
    const auto v = net_->find(name);
    const auto& states = net_->variable(*v).states;
    fixed[*v] = static_cast<std::size_t>(std::find(states.begin(), states.end(), label) - states.begin());
  }
  return fixed;
}

bool JointOracle::consistent(std::size_t k, const std::vector<std::size_t>& fixed) const {
  for (std::size_t v = 0; v < fixed.size(); ++v)
    if (fixed[v] != oobnlab::kUnobserved && assignments_[k][v] != fixed[v]) return false;
  return true;
}

double JointOracle::evidence_probability(const Evidence& evidence) const {
  const auto fixed = fixed_states(evidence);
  double total = 0.0;
  for (std::size_t k = 0; k < joint_.size(); ++k)
    if (consistent(k, fixed)) total += joint_[k];
  return total;
}

std::vector<double> JointOracle::joint_with(const std::string& variable, const Evidence& evidence) const {
  const auto fixed = fixed_states(evidence);
  const std::size_t v = *net_->find(variable);
  std::vector<double> out(net_->cardinality(v), 0.0);
  for (std::size_t k = 0; k < joint_.size(); ++k)
    if (consistent(k, fixed)) out[assignments_[k][v]] += joint_[k];
  return out;
}

std::vector<double> JointOracle::posterior(const std::string& variable, const Evidence& evidence) const {
  auto out = joint_with(variable, evidence);
  const double z = std::accumulate(out.begin(), out.end(), 0.0);
  if (z <= 0.0) return {};
  for (auto& p : out) p /= z;
  return out;
}

double JointOracle::independence_deviation(const std::set<std::string>& x, const std::set<std::string>& y,
                                           const std::set<std::string>& z) const {
  auto ids = [&](const std::set<std::string>& names) {
    std::vector<std::size_t> out;
    for (const auto& n : names) out.push_back(*net_->find(n));
    return out;
  };
  const auto xs = ids(x), ys = ids(y), zs = ids(z);
  auto key = [&](std::size_t k, const std::vector<std::size_t>& vs) {
    std::vector<std::size_t> out;
    for (std::size_t v : vs) out.push_back(assignments_[k][v]);
    return out;
  };
  using Key = std::vector<std::size_t>;
  std::map<Key, double> pz;
  std::map<std::pair<Key, Key>, double> pxz, pyz;
  std::map<std::tuple<Key, Key, Key>, double> pxyz;
  for (std::size_t k = 0; k < joint_.size(); ++k) {
    const Key kx = key(k, xs), ky = key(k, ys), kz = key(k, zs);
    pz[kz] += joint_[k];
    pxz[{kx, kz}] += joint_[k];
    pyz[{ky, kz}] += joint_[k];
    pxyz[{kx, ky, kz}] += joint_[k];
  }
  double worst = 0.0;
  for (const auto& [kxyz, p] : pxyz) {
    const auto& [kx, ky, kz] = kxyz;
    const double z_mass = pz[kz];
    if (z_mass <= 0.0) continue;
    const double lhs = p / z_mass;
    const double rhs = (pxz[{kx, kz}] / z_mass) * (pyz[{ky, kz}] / z_mass);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

double JointOracle::mutual_information(const std::string& x, const std::string& y, const Evidence& evidence) const {
  const auto fixed = fixed_states(evidence);
  const std::size_t vx = *net_->find(x), vy = *net_->find(y);
  const std::size_t kx = net_->cardinality(vx), ky = net_->cardinality(vy);
  std::vector<double> pxy(kx * ky, 0.0);
  double z = 0.0;
  for (std::size_t k = 0; k < joint_.size(); ++k) {
    if (!consistent(k, fixed)) continue;
    pxy[assignments_[k][vx] * ky + assignments_[k][vy]] += joint_[k];
    z += joint_[k];
  }
  std::vector<double> px(kx, 0.0), py(ky, 0.0);
  for (std::size_t a = 0; a < kx; ++a)
    for (std::size_t b = 0; b < ky; ++b) {
      pxy[a * ky + b] /= z;
      px[a] += pxy[a * ky + b];
      py[b] += pxy[a * ky + b];
    }
  double mi = 0.0;
  for (std::size_t a = 0; a < kx; ++a)
    for (std::size_t b = 0; b < ky; ++b) {
      const double p = pxy[a * ky + b];
      if (p > 0.0) mi += p * std::log2(p / (px[a] * py[b]));
    }
  return mi;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return INFINITY;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace testsupport
