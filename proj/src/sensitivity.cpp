#include "oobnlab/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "oobnlab/error.hpp"
#include "oobnlab/inference.hpp"

namespace oobnlab {

using nlohmann::json;

double SensitivityFunction::derivative(double t) const {
  const double d = gamma * t + delta;
  return (alpha * delta - beta * gamma) / (d * d);
}

std::vector<ParameterRef> all_parameters(const Network& net) {
  std::vector<ParameterRef> out;
  for (VarId v = 0; v < net.size(); ++v)
    for (std::size_t r = 0; r < net.row_count(v); ++r)
      for (const auto& s : net.variable(v).states) out.push_back({net.name(v), r, s});
  return out;
}

Assignment parent_configuration(const Network& net, const ParameterRef& ref) {
  const VarId v = net.id(ref.variable);
  if (ref.row >= net.row_count(v))
    throw Error(Errc::InvalidArgument, "row " + std::to_string(ref.row) + " out of range for '" + ref.variable + "'");
  Assignment out;
  const auto states = net.row_parent_states(v, ref.row);
  const auto& ps = net.parents(v);
  for (std::size_t i = 0; i < ps.size(); ++i) out[net.name(ps[i])] = net.variable(ps[i]).states[states[i]];
  return out;
}

std::vector<double> covary_row(std::span<const double> row, std::size_t state, double t) {
  if (state >= row.size()) throw Error(Errc::InvalidArgument, "state index out of range");
  if (!(t >= 0.0 && t <= 1.0)) throw Error(Errc::InvalidArgument, "parameter value must lie in [0, 1]", {{"t", t}});
  std::vector<double> out(row.begin(), row.end());
  double rest = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i)
    if (i != state) rest += row[i];
  if (t == row[state]) return out;
  if (rest <= 0.0) {
    if (t == 1.0) {
      std::fill(out.begin(), out.end(), 0.0);
      out[state] = 1.0;
      return out;
    }
    throw Error(Errc::DegenerateRow, "cannot co-vary a row whose other entries are all zero", {{"t", t}});
  }
  const double scale = (1.0 - t) / rest;
  double sum = t;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i == state) continue;
    out[i] = row[i] * scale;
    sum += out[i];
  }
  out[state] = t;
  // Push the rounding residue into the largest co-varied entry so the row sums to 1.
  const double residue = 1.0 - sum;
  if (residue != 0.0) {
    std::size_t big = state == 0 ? 1 : 0;
    for (std::size_t i = 0; i < out.size(); ++i)
      if (i != state && out[i] > out[big]) big = i;
    out[big] = std::clamp(out[big] + residue, 0.0, 1.0);
  }
  return out;
}

Network covary_cpt_row(const Network& net, const ParameterRef& ref, double t) {
  const VarId v = net.id(ref.variable);
  if (ref.row >= net.row_count(v))
    throw Error(Errc::InvalidArgument, "row " + std::to_string(ref.row) + " out of range for '" + ref.variable + "'");
  auto row = covary_row(net.row(v, ref.row), net.state_index(v, ref.state), t);
  return net.with_row(v, ref.row, row);
}

namespace {

struct Resolved {
  VarId h;
  std::size_t h_state;
  StateVector ev;
  bool empty_evidence;
};

Resolved resolve(const Network& net, const Hypothesis& hyp, const Evidence& evidence) {
  Resolved r;
  r.h = net.id(hyp.variable);
  r.h_state = net.state_index(r.h, hyp.state);
  r.ev = resolve_evidence(net, evidence);
  if (r.ev[r.h] != kUnobserved)
    throw Error(Errc::HypothesisObserved, "hypothesis variable '" + hyp.variable + "' is observed",
                {{"variable", hyp.variable}});
  r.empty_evidence = std::all_of(r.ev.begin(), r.ev.end(), [](std::size_t s) { return s == kUnobserved; });
  return r;
}

// Unnormalized (P(h, e), P(e)).
std::pair<double, double> joint_and_evidence(const Network& net, const Resolved& r) {
  const VarId targets[] = {r.h};
  const Factor f = evidence_joint(net, targets, r.ev);
  double total = 0.0;
  for (double x : f.values) total += x;
  return {f.values[r.h_state], r.empty_evidence ? 1.0 : total};
}

SensitivityFunction function_for(const Network& net, const Resolved& r, const Hypothesis& hyp,
                                 const Evidence& evidence, const ParameterRef& ref) {
  const VarId v = net.id(ref.variable);
  const std::size_t s = net.state_index(v, ref.state);
  if (ref.row >= net.row_count(v))
    throw Error(Errc::InvalidArgument, "row " + std::to_string(ref.row) + " out of range for '" + ref.variable + "'");
  const auto [n0, d0] = joint_and_evidence(covary_cpt_row(net, ref, 0.0), r);
  const auto [n1, d1] = joint_and_evidence(covary_cpt_row(net, ref, 1.0), r);

  SensitivityFunction sf;
  sf.hypothesis = hyp;
  sf.evidence = evidence;
  sf.parameter = ref;
  sf.t0 = net.entry(v, ref.row, s);
  double alpha = n1 - n0, beta = n0, gamma = d1 - d0, delta = d0;
  const double norm = delta != 0.0 ? delta : gamma;
  if (norm == 0.0)
    throw Error(Errc::ZeroProbabilityEvidence, "evidence has probability zero for every value of the parameter");
  sf.alpha = alpha / norm;
  sf.beta = beta / norm;
  sf.gamma = gamma / norm;
  sf.delta = delta / norm;
  return sf;
}

}  // namespace

SensitivityFunction sensitivity_function(const Network& net, const Hypothesis& hypothesis, const Evidence& evidence,
                                         const ParameterRef& ref) {
  return function_for(net, resolve(net, hypothesis, evidence), hypothesis, evidence, ref);
}

double sensitivity_value(const SensitivityFunction& sf) { return std::abs(sf.derivative(sf.t0)); }

std::vector<RankedParameter> rank_parameters(const Network& net, const Hypothesis& hypothesis,
                                             const Evidence& evidence, std::vector<ParameterRef> candidates) {
  if (candidates.empty()) candidates = all_parameters(net);
  const Resolved r = resolve(net, hypothesis, evidence);
  if (!(probability_of_evidence(net, r.ev) > 0.0))
    throw Error(Errc::ZeroProbabilityEvidence, "evidence has probability zero");

  std::vector<std::optional<RankedParameter>> slots(candidates.size());
  std::exception_ptr failure;
  const auto n = static_cast<std::ptrdiff_t>(candidates.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& ref = candidates[static_cast<std::size_t>(i)];
    try {
      auto sf = function_for(net, r, hypothesis, evidence, ref);
      const double value = sensitivity_value(sf);
      slots[static_cast<std::size_t>(i)] = RankedParameter{std::move(sf), value};
    } catch (const Error& e) {
      if (e.code() != Errc::DegenerateRow) {
#pragma omp critical
        if (!failure) failure = std::current_exception();
      }
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<RankedParameter> out;
  for (auto& s : slots)
    if (s) out.push_back(std::move(*s));
  std::stable_sort(out.begin(), out.end(), [](const RankedParameter& a, const RankedParameter& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.function.parameter < b.function.parameter;
  });
  return out;
}

std::vector<EvidenceSensitivityRange> evidence_sensitivity_ranges(const Network& net, const Hypothesis& hypothesis,
                                                                  const Evidence& evidence) {
  const Resolved r = resolve(net, hypothesis, evidence);
  const VarId single[] = {r.h};
  const Factor base = evidence_joint(net, single, r.ev);
  double total = 0.0;
  for (double x : base.values) total += x;
  if (!(total > 0.0)) throw Error(Errc::ZeroProbabilityEvidence, "evidence has probability zero");
  const double current = base.values[r.h_state] / total;

  std::vector<VarId> vars;
  for (VarId v = 0; v < net.size(); ++v)
    if (v != r.h && r.ev[v] == kUnobserved) vars.push_back(v);
  std::vector<EvidenceSensitivityRange> out(vars.size());
  const auto n = static_cast<std::ptrdiff_t>(vars.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const VarId v = vars[static_cast<std::size_t>(i)];
    const VarId pair[] = {r.h, v};
    const Factor joint = evidence_joint(net, pair, r.ev);
    const std::size_t kv = net.cardinality(v);
    EvidenceSensitivityRange range{net.name(v), current, current, current, "", ""};
    bool first = true;
    for (std::size_t s = 0; s < kv; ++s) {
      double pe = 0.0;
      for (std::size_t h = 0; h < net.cardinality(r.h); ++h) pe += joint.values[h * kv + s];
      if (!(pe > 0.0)) continue;
      const double p = joint.values[r.h_state * kv + s] / pe;
      const auto& label = net.variable(v).states[s];
      if (first || p < range.min_posterior) {
        range.min_posterior = p;
        range.min_state = label;
      }
      if (first || p > range.max_posterior) {
        range.max_posterior = p;
        range.max_state = label;
      }
      first = false;
    }
    out[static_cast<std::size_t>(i)] = std::move(range);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.width() != b.width()) return a.width() > b.width();
    return a.variable < b.variable;
  });
  return out;
}

double entropy_of(std::span<const double> distribution) {
  double h = 0.0;
  for (double p : distribution)
    if (p > 0.0) h -= p * std::log2(p);
  return std::max(0.0, h);
}

double entropy(const Network& net, std::string_view variable, const Evidence& evidence) {
  return entropy_of(marginal(net, variable, evidence).probabilities);
}

double mutual_information(const Network& net, std::string_view x, std::string_view y, const Evidence& evidence) {
  const VarId vx = net.id(x), vy = net.id(y);
  if (vx == vy) throw Error(Errc::InvalidArgument, "mutual information needs two distinct variables");
  const VarId pair[] = {vx, vy};
  const Factor joint = evidence_joint(net, pair, resolve_evidence(net, evidence));
  double total = 0.0;
  for (double p : joint.values) total += p;
  if (!(total > 0.0)) throw Error(Errc::ZeroProbabilityEvidence, "evidence has probability zero");
  const std::size_t kx = net.cardinality(vx), ky = net.cardinality(vy);
  std::vector<double> px(kx, 0.0), py(ky, 0.0);
  for (std::size_t i = 0; i < kx; ++i)
    for (std::size_t j = 0; j < ky; ++j) {
      const double p = joint.values[i * ky + j] / total;
      px[i] += p;
      py[j] += p;
    }
  double mi = 0.0;
  for (std::size_t i = 0; i < kx; ++i)
    for (std::size_t j = 0; j < ky; ++j) {
      const double p = joint.values[i * ky + j] / total;
      if (p > 0.0) mi += p * std::log2(p / (px[i] * py[j]));
    }
  return std::max(0.0, mi);
}

json to_json(const ParameterRef& ref, const Network& net) {
  return {{"variable", ref.variable}, {"row", ref.row}, {"parents", parent_configuration(net, ref)}, {"state", ref.state}};
}

json to_json(const RankedParameter& p, const Network& net) {
  const auto& f = p.function;
  return {{"parameter", to_json(f.parameter, net)},
          {"alpha", f.alpha},
          {"beta", f.beta},
          {"gamma", f.gamma},
          {"delta", f.delta},
          {"t0", f.t0},
          {"f_t0", f(f.t0)},
          {"sensitivity_value", p.value}};
}

json to_json(const EvidenceSensitivityRange& r) {
  return {{"variable", r.variable},  {"min", r.min_posterior}, {"min_state", r.min_state},
          {"max", r.max_posterior}, {"max_state", r.max_state}, {"current", r.current}};
}

}  // namespace oobnlab
