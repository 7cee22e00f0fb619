#include "oobnlab/inference.hpp"

#include <omp.h>

#include <algorithm>
#include <exception>
#include <limits>

#include "oobnlab/error.hpp"

namespace oobnlab {

double Posterior::at(std::string_view state) const {
  for (std::size_t i = 0; i < states.size(); ++i)
    if (states[i] == state) return probabilities[i];
  throw Error(Errc::UnknownState, "posterior of '" + variable + "' has no state '" + std::string(state) + "'");
}

namespace {

std::vector<bool> relevant_set(const Network& net, std::span<const VarId> targets, const StateVector& evidence) {
  std::vector<bool> keep(net.size(), false);
  std::vector<VarId> stack(targets.begin(), targets.end());
  for (VarId v = 0; v < net.size(); ++v)
    if (evidence[v] != kUnobserved) stack.push_back(v);
  while (!stack.empty()) {
    VarId v = stack.back();
    stack.pop_back();
    if (keep[v]) continue;
    keep[v] = true;
    for (VarId p : net.parents(v)) stack.push_back(p);
  }
  return keep;
}

// CPT of v as a factor over its unobserved family members, evidence applied.
Factor cpt_factor(const Network& net, VarId v, const StateVector& evidence) {
  std::vector<VarId> family = net.parents(v);
  family.push_back(v);
  Factor f;
  std::vector<std::size_t> fam_cards;
  for (VarId u : family) {
    fam_cards.push_back(net.cardinality(u));
    if (evidence[u] == kUnobserved) {
      f.scope.push_back(u);
      f.cards.push_back(net.cardinality(u));
    }
  }
  const std::size_t n = scope_size(f.cards);
  f.values.resize(n);
  const auto table = net.table(v);
  std::vector<std::size_t> digits(f.scope.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t rem = i;
    for (std::size_t k = f.scope.size(); k-- > 0;) {
      digits[k] = rem % f.cards[k];
      rem /= f.cards[k];
    }
    // Flat table index is the family configuration in (parents..., child) order.
    std::size_t idx = 0, d = 0;
    for (std::size_t k = 0; k < family.size(); ++k) {
      const std::size_t s = evidence[family[k]] == kUnobserved ? digits[d++] : evidence[family[k]];
      idx = idx * fam_cards[k] + s;
    }
    f.values[i] = table[idx];
  }
  return f;
}

using Adjacency = std::vector<std::set<VarId>>;

std::vector<VarId> min_fill_order(const Network& net, Adjacency adj, std::vector<VarId> hidden,
                                  const std::vector<VarId>& prefix) {
  std::vector<VarId> order;
  auto eliminate = [&](VarId v) {
    std::vector<VarId> nb(adj[v].begin(), adj[v].end());
    for (std::size_t i = 0; i < nb.size(); ++i)
      for (std::size_t j = i + 1; j < nb.size(); ++j) {
        adj[nb[i]].insert(nb[j]);
        adj[nb[j]].insert(nb[i]);
      }
    for (VarId u : nb) adj[u].erase(v);
    adj[v].clear();
    order.push_back(v);
    hidden.erase(std::find(hidden.begin(), hidden.end(), v));
  };
  for (VarId v : prefix)
    if (std::find(hidden.begin(), hidden.end(), v) != hidden.end()) eliminate(v);
  while (!hidden.empty()) {
    VarId best = hidden.front();
    std::size_t best_fill = std::numeric_limits<std::size_t>::max();
    for (VarId v : hidden) {
      std::vector<VarId> nb(adj[v].begin(), adj[v].end());
      std::size_t fill = 0;
      for (std::size_t i = 0; i < nb.size(); ++i)
        for (std::size_t j = i + 1; j < nb.size(); ++j)
          if (!adj[nb[i]].count(nb[j])) ++fill;
      if (fill < best_fill || (fill == best_fill && net.name(v) < net.name(best))) {
        best = v;
        best_fill = fill;
      }
    }
    eliminate(best);
  }
  return order;
}

struct QueryGraph {
  std::vector<Factor> factors;
  std::vector<VarId> hidden;
  Adjacency adjacency;
};

QueryGraph prepare(const Network& net, std::span<const VarId> targets, const StateVector& evidence) {
  QueryGraph q;
  auto keep = relevant_set(net, targets, evidence);
  std::vector<bool> is_target(net.size(), false);
  for (VarId t : targets) is_target[t] = true;
  q.adjacency.assign(net.size(), {});
  for (VarId v = 0; v < net.size(); ++v) {
    if (!keep[v]) continue;
    q.factors.push_back(cpt_factor(net, v, evidence));
    const auto& scope = q.factors.back().scope;
    for (VarId a : scope)
      for (VarId b : scope)
        if (a != b) q.adjacency[a].insert(b);
    if (evidence[v] == kUnobserved && !is_target[v]) q.hidden.push_back(v);
  }
  return q;
}

Factor scalar(double value) { return Factor{{}, {}, {value}}; }

}  // namespace

Factor evidence_joint(const Network& net, std::span<const VarId> targets, const StateVector& evidence,
                      const std::vector<VarId>* order, EliminationStats* stats) {
  QueryGraph q = prepare(net, targets, evidence);
  const std::vector<VarId> empty;
  auto elim = min_fill_order(net, q.adjacency, q.hidden, order ? *order : empty);

  std::vector<Factor> pool = std::move(q.factors);
  std::size_t max_scope = 0;
  for (VarId v : elim) {
    Factor product = scalar(1.0);
    std::vector<Factor> rest;
    for (auto& f : pool) {
      if (f.contains(v))
        product = kernels::parallel::multiply(product, f);
      else
        rest.push_back(std::move(f));
    }
    max_scope = std::max(max_scope, product.scope.size());
    rest.push_back(kernels::parallel::sum_out(product, v));
    pool = std::move(rest);
  }
  Factor result = scalar(1.0);
  for (const auto& f : pool) result = kernels::parallel::multiply(result, f);
  max_scope = std::max(max_scope, result.scope.size());
  if (stats) {
    stats->max_factor_scope = max_scope;
    stats->order = elim;
  }

  // Unobserved targets come out of elimination; observed ones are indicator dimensions.
  std::vector<VarId> free_targets;
  for (VarId t : targets)
    if (evidence[t] == kUnobserved) free_targets.push_back(t);
  result = reorder(result, free_targets);
  if (free_targets.size() == targets.size()) return result;

  Factor out;
  out.scope.assign(targets.begin(), targets.end());
  for (VarId t : targets) out.cards.push_back(net.cardinality(t));
  out.values.assign(scope_size(out.cards), 0.0);
  std::vector<std::size_t> digits(targets.size());
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    std::size_t rem = i;
    for (std::size_t k = targets.size(); k-- > 0;) {
      digits[k] = rem % out.cards[k];
      rem /= out.cards[k];
    }
    bool consistent = true;
    std::size_t j = 0;
    for (std::size_t k = 0; k < targets.size(); ++k) {
      if (evidence[targets[k]] == kUnobserved)
        j = j * out.cards[k] + digits[k];
      else if (digits[k] != evidence[targets[k]])
        consistent = false;
    }
    if (consistent) out.values[i] = result.values[j];
  }
  return out;
}

namespace {

Posterior normalize(const Network& net, VarId target, const Factor& joint) {
  double total = 0.0;
  for (double v : joint.values) total += v;
  if (!(total > 0.0))
    throw Error(Errc::ZeroProbabilityEvidence, "evidence has probability zero", {{"target", net.name(target)}});
  Posterior post{net.name(target), net.variable(target).states, {}};
  post.probabilities.reserve(joint.values.size());
  for (double v : joint.values) post.probabilities.push_back(v / total);
  return post;
}

}  // namespace

Posterior marginal(const Network& net, VarId target, const StateVector& evidence, const std::vector<VarId>* order) {
  const VarId targets[] = {target};
  return normalize(net, target, evidence_joint(net, targets, evidence, order));
}

Posterior marginal(const Network& net, std::string_view target, const Evidence& evidence) {
  return marginal(net, net.id(target), resolve_evidence(net, evidence));
}

double probability_of_evidence(const Network& net, const StateVector& evidence) {
  if (std::all_of(evidence.begin(), evidence.end(), [](std::size_t s) { return s == kUnobserved; })) return 1.0;
  return evidence_joint(net, {}, evidence).values.at(0);
}

double probability_of_evidence(const Network& net, const Evidence& evidence) {
  return probability_of_evidence(net, resolve_evidence(net, evidence));
}

std::vector<Posterior> posterior_all(const Network& net, const StateVector& evidence, const std::vector<VarId>* order) {
  if (!(probability_of_evidence(net, evidence) > 0.0))
    throw Error(Errc::ZeroProbabilityEvidence, "evidence has probability zero");
  std::vector<Posterior> out(net.size());
  std::exception_ptr failure;
  const auto n = static_cast<std::ptrdiff_t>(net.size());
#pragma omp parallel for schedule(dynamic) if (net.size() >= 8)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = marginal(net, static_cast<VarId>(i), evidence, order);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::map<std::string, Posterior> posterior_all(const Network& net, const Evidence& evidence) {
  std::map<std::string, Posterior> out;
  for (auto& p : posterior_all(net, resolve_evidence(net, evidence))) out.emplace(p.variable, std::move(p));
  return out;
}

std::vector<std::string> elimination_order(const Network& net, const std::set<std::string>& targets,
                                           const Evidence& evidence) {
  std::vector<VarId> ids;
  for (const auto& t : targets) ids.push_back(net.id(t));
  const auto ev = resolve_evidence(net, evidence);
  QueryGraph q = prepare(net, ids, ev);
  std::vector<std::string> out;
  for (VarId v : min_fill_order(net, q.adjacency, q.hidden, {})) out.push_back(net.name(v));
  return out;
}

namespace {

JointSums enumerate_checked(const Network& net, const StateVector& fixed) {
  if (net.size() > kMaxEnumerationVariables)
    throw Error(Errc::TooLargeForEnumeration,
                "network has " + std::to_string(net.size()) + " variables; enumeration is limited to " +
                    std::to_string(kMaxEnumerationVariables),
                {{"variables", net.size()}});
  std::size_t states = 1;
  for (VarId v = 0; v < net.size(); ++v) {
    if (fixed[v] != kUnobserved) continue;
    states *= net.cardinality(v);
    if (states > kMaxEnumerationStates)
      throw Error(Errc::TooLargeForEnumeration, "joint state space too large to enumerate");
  }
  return kernels::parallel::enumerate_joint(net, fixed);
}

Posterior enumerated_posterior(const Network& net, VarId v, const JointSums& sums) {
  if (!(sums.total > 0.0)) throw Error(Errc::ZeroProbabilityEvidence, "evidence has probability zero");
  Posterior post{net.name(v), net.variable(v).states, {}};
  for (double m : sums.marginals[v]) post.probabilities.push_back(m / sums.total);
  return post;
}

}  // namespace

Posterior brute_force_marginal(const Network& net, std::string_view target, const Evidence& evidence) {
  const VarId t = net.id(target);
  return enumerated_posterior(net, t, enumerate_checked(net, resolve_evidence(net, evidence)));
}

double brute_force_probability_of_evidence(const Network& net, const Evidence& evidence) {
  return enumerate_checked(net, resolve_evidence(net, evidence)).total;
}

std::map<std::string, Posterior> brute_force_posterior_all(const Network& net, const Evidence& evidence) {
  auto sums = enumerate_checked(net, resolve_evidence(net, evidence));
  std::map<std::string, Posterior> out;
  for (VarId v = 0; v < net.size(); ++v) out.emplace(net.name(v), enumerated_posterior(net, v, sums));
  return out;
}

}  // namespace oobnlab
