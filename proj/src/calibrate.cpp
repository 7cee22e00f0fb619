#include "oobnlab/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <set>

#include "oobnlab/error.hpp"
#include "oobnlab/inference.hpp"

namespace oobnlab {

using nlohmann::json;

ParameterRef parameter_ref(const Network& net, const std::string& variable, const Assignment& parents,
                           const std::string& state) {
  const std::string full = resolve_name(net, variable);
  const VarId v = net.id(full);
  net.state_index(v, state);
  const Assignment resolved = resolve_names(net, parents);
  std::vector<std::size_t> states;
  for (VarId p : net.parents(v)) {
    auto it = resolved.find(net.name(p));
    if (it == resolved.end())
      throw Error(Errc::PartialAssignment, "parameter of '" + full + "' does not fix parent '" + net.name(p) + "'",
                  {{"variable", full}, {"parent", net.name(p)}});
    states.push_back(net.state_index(p, it->second));
  }
  if (resolved.size() != states.size())
    throw Error(Errc::InvalidArgument, "parameter of '" + full + "' names variables that are not its parents",
                {{"variable", full}});
  return {full, net.row_index(v, states), state};
}

SensitivityFunction target_sensitivity_function(const ModelBundle& bundle, const Network& net,
                                                const CalibrationTarget& t) {
  if (!t.parameter) throw Error(Errc::InvalidArgument, "target '" + t.id + "' names no parameter");
  const Evidence ev = bundle.scenario_evidence(t.preset, t.evidence);
  const auto ref = parameter_ref(net, t.parameter->variable, t.parameter->parents, t.parameter->state);
  return sensitivity_function(net, {resolve_name(net, t.variable), t.state}, ev, ref);
}

double evaluate_target(const ModelBundle& bundle, const Network& net, const CalibrationTarget& t) {
  const Evidence ev = bundle.scenario_evidence(t.preset, t.evidence);
  switch (t.kind) {
    case TargetKind::Posterior:
      return marginal(net, resolve_name(net, t.variable), ev).at(t.state);
    case TargetKind::EvidenceProbability:
      return probability_of_evidence(net, ev);
    case TargetKind::SensitivityFunction:
      return target_sensitivity_function(bundle, net, t).alpha;
  }
  return 0.0;
}

namespace {

// (a t + b) / (c t + d)
struct Fraction {
  double a = 0.0, b = 0.0, c = 0.0, d = 1.0;
  double operator()(double t) const { return (a * t + b) / (c * t + d); }
};

struct Fitted {
  const CalibrationTarget* target;
  Hypothesis hypothesis;  // Posterior targets
  Evidence evidence;      // flat names
  StateVector resolved;
};

Fraction fraction_for(const Network& net, const Fitted& f, const ParameterRef& ref) {
  if (f.target->kind == TargetKind::Posterior) {
    const auto sf = sensitivity_function(net, f.hypothesis, f.evidence, ref);
    return {sf.alpha, sf.beta, sf.gamma, sf.delta};
  }
  const double p0 = probability_of_evidence(covary_cpt_row(net, ref, 0.0), f.resolved);
  const double p1 = probability_of_evidence(covary_cpt_row(net, ref, 1.0), f.resolved);
  return {p1 - p0, p0, 0.0, 1.0};
}

// Penalty on moving a cell away from its elicited value, in units of 0.1.
struct Anchor {
  double weight = 0.0;
  double origin = 0.0;
  double operator()(double t) const {
    const double d = (t - origin) / 0.1;
    return weight * d * d;
  }
};

double loss_at(const std::vector<Fraction>& fs, const std::vector<Fitted>& fitted, const Anchor& anchor, double t) {
  double loss = anchor(t);
  for (std::size_t k = 0; k < fs.size(); ++k) {
    const double r = (fs[k](t) - fitted[k].target->value) / fitted[k].target->tolerance;
    loss += r * r;
  }
  return loss;
}

// Global search on a grid seeded with each target's exact inverse, then a
// golden-section polish around the best point.
double minimize(const std::vector<Fraction>& fs, const std::vector<Fitted>& fitted, const Anchor& anchor, double lo,
                double hi) {
  std::vector<double> candidates;
  if (anchor.origin >= lo && anchor.origin <= hi) candidates.push_back(anchor.origin);
  constexpr int kGrid = 100;
  for (int i = 0; i <= kGrid; ++i) candidates.push_back(lo + (hi - lo) * i / kGrid);
  for (std::size_t k = 0; k < fs.size(); ++k) {
    const double v = fitted[k].target->value;
    const double denom = fs[k].a - v * fs[k].c;
    if (std::abs(denom) > 1e-300) {
      const double t = (v * fs[k].d - fs[k].b) / denom;
      if (t >= lo && t <= hi) candidates.push_back(t);
    }
  }
  double best = candidates.front(), best_loss = loss_at(fs, fitted, anchor, best);
  for (double t : candidates) {
    const double l = loss_at(fs, fitted, anchor, t);
    if (l < best_loss) {
      best = t;
      best_loss = l;
    }
  }
  const double step = (hi - lo) / kGrid;
  double a = std::max(lo, best - step), b = std::min(hi, best + step);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = loss_at(fs, fitted, anchor, x1), f2 = loss_at(fs, fitted, anchor, x2);
  for (int it = 0; it < 80 && b - a > 1e-13; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = loss_at(fs, fitted, anchor, x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = loss_at(fs, fitted, anchor, x2);
    }
  }
  const double polished = f1 < f2 ? x1 : x2;
  return loss_at(fs, fitted, anchor, polished) < best_loss ? polished : best;
}

bool settled(const std::vector<Fitted>& fitted, const std::vector<double>& values, double fraction) {
  for (std::size_t k = 0; k < fitted.size(); ++k)
    if (std::abs(values[k] - fitted[k].target->value) > fraction * fitted[k].target->tolerance) return false;
  return true;
}

bool within(const CalibrationTarget& t, double value, std::optional<double> beta) {
  if (std::abs(value - t.value) > t.tolerance) return false;
  return !beta || std::abs(*beta - t.beta) <= t.tolerance;
}

std::vector<ParameterRef> default_free_cells(const ModelBundle& bundle) {
  const Network& net = bundle.network();
  std::map<std::string, std::set<std::string>> instances;
  for (const auto& o : bundle.flat.origins) instances[o.template_name].insert(o.instance_path);
  std::vector<ParameterRef> cells;
  for (VarId v = 0; v < net.size(); ++v) {
    const auto& o = bundle.flat.origins[v];
    if (o.standin || instances[o.template_name].size() != 1) continue;
    if (bundle.library.at(o.template_name).cpts.at(o.local_name).provenance != Provenance::Elicited) continue;
    for (std::size_t r = 0; r < net.row_count(v); ++r)
      for (const auto& s : net.variable(v).states) cells.push_back({net.name(v), r, s});
  }
  return cells;
}

}  // namespace

CalibrationResult calibrate(const ModelBundle& bundle, const std::vector<CalibrationTarget>& targets,
                            const CalibrationOptions& options) {
  if (!(options.lower >= 0.0 && options.lower < options.upper && options.upper <= 1.0))
    throw Error(Errc::InvalidArgument, "calibration bounds must satisfy 0 <= lower < upper <= 1");
  Network net = bundle.network();
  const std::vector<ParameterRef> cells = options.free_cells.empty() ? default_free_cells(bundle) : options.free_cells;
  for (const auto& c : cells) {
    const VarId v = net.id(c.variable);
    const auto& o = bundle.flat.origins[v];
    const auto prov = bundle.library.at(o.template_name).cpts.at(o.local_name).provenance;
    if (prov == Provenance::Learned || prov == Provenance::Deterministic)
      throw Error(Errc::InvalidArgument, "cell of '" + c.variable + "' belongs to a " +
                                             std::string(to_string(prov)) + " CPT and cannot be calibrated");
  }

  std::vector<Fitted> fitted;
  for (const auto& t : targets) {
    if (!t.fit) continue;
    Fitted f{&t, {}, bundle.scenario_evidence(t.preset, t.evidence), {}};
    if (t.kind == TargetKind::Posterior) f.hypothesis = {resolve_name(net, t.variable), t.state};
    f.resolved = resolve_evidence(net, f.evidence);
    fitted.push_back(std::move(f));
  }
  auto current_values = [&](const Network& n) {
    std::vector<double> out;
    for (const auto& f : fitted) out.push_back(evaluate_target(bundle, n, *f.target));
    return out;
  };
  auto total_loss = [&](const std::vector<double>& values) {
    double l = 0.0;
    for (std::size_t k = 0; k < fitted.size(); ++k) {
      const double r = (values[k] - fitted[k].target->value) / fitted[k].target->tolerance;
      l += r * r;
    }
    return l;
  };

  std::map<ParameterRef, double> origin;
  for (const auto& c : cells) origin[c] = net.row(net.id(c.variable), c.row)[net.state_index(net.id(c.variable), c.state)];
  auto anchor_loss = [&](const Network& n) {
    double l = 0.0;
    for (const auto& [c, t0] : origin) {
      const VarId v = n.id(c.variable);
      l += Anchor{options.anchor, t0}(n.row(v, c.row)[n.state_index(v, c.state)]);
    }
    return l;
  };

  CalibrationReport report;
  report.free_cells = cells.size();
  std::vector<bool> influenced(fitted.size(), false);
  std::set<ParameterRef> moved;
  std::vector<double> values = current_values(net);
  double loss = total_loss(values) + anchor_loss(net);
  report.converged = fitted.empty() || settled(fitted, values, options.settle);

  while (!report.converged && report.sweeps < options.max_sweeps && !cells.empty()) {
    ++report.sweeps;
    for (const auto& cell : cells) {
      const VarId v = net.id(cell.variable);
      const std::size_t s = net.state_index(v, cell.state);
      const auto row = net.row(v, cell.row);
      const double t0 = row[s];
      if (t0 >= 1.0) continue;  // nothing to co-vary

      std::vector<Fraction> fs(fitted.size());
      std::exception_ptr failure;
      const auto n = static_cast<std::ptrdiff_t>(fitted.size());
#pragma omp parallel for schedule(dynamic)
      for (std::ptrdiff_t k = 0; k < n; ++k) {
        try {
          fs[static_cast<std::size_t>(k)] = fraction_for(net, fitted[static_cast<std::size_t>(k)], cell);
        } catch (...) {
#pragma omp critical
          if (!failure) failure = std::current_exception();
        }
      }
      if (failure) std::rethrow_exception(failure);
      for (std::size_t k = 0; k < fs.size(); ++k)
        if (std::abs(fs[k](1.0) - fs[k](0.0)) > 1e-12) influenced[k] = true;

      const Anchor anchor{options.anchor, origin.at(cell)};
      const double here = loss_at(fs, fitted, anchor, t0);
      const double t = minimize(fs, fitted, anchor, options.lower, options.upper);
      if (loss_at(fs, fitted, anchor, t) < here - 1e-13 * (1.0 + here)) {
        net = covary_cpt_row(net, cell, t);
        moved.insert(cell);
      }
    }
    values = current_values(net);
    const double next = total_loss(values) + anchor_loss(net);
    report.converged = settled(fitted, values, options.settle);
    if (!(next < loss - options.min_improvement * (1.0 + loss))) break;  // no further progress
    loss = next;
  }
  report.moved_cells = moved.size();

  // Write the moved tables back into their templates.
  std::map<std::string, OobnTemplate> edited;
  for (const auto& [name, t] : bundle.library.templates()) edited.emplace(name, t);
  std::set<VarId> touched;
  for (const auto& c : moved) touched.insert(net.id(c.variable));
  for (VarId v : touched) {
    const auto& o = bundle.flat.origins[v];
    auto& cpt = edited.at(o.template_name).cpts.at(o.local_name);
    for (std::size_t r = 0; r < net.row_count(v); ++r) {
      const auto row = net.row(v, r);
      cpt.table[r].assign(row.begin(), row.end());
    }
    cpt.provenance = Provenance::Calibrated;
  }
  std::vector<OobnTemplate> all;
  for (auto& [_, t] : edited) all.push_back(std::move(t));
  ModelBundle out = touched.empty() ? bundle : with_library(bundle, TemplateLibrary::from_templates(std::move(all)));

  std::size_t fit_index = 0;
  for (const auto& t : targets) {
    TargetOutcome o;
    o.target = t;
    if (t.kind == TargetKind::SensitivityFunction) {
      const auto before = target_sensitivity_function(bundle, bundle.network(), t);
      const auto after = target_sensitivity_function(out, out.network(), t);
      o.before = before.alpha;
      o.beta_before = before.beta;
      o.after = after.alpha;
      o.beta_after = after.beta;
    } else {
      o.before = evaluate_target(bundle, bundle.network(), t);
      o.after = evaluate_target(out, out.network(), t);
    }
    o.met = within(t, o.after, o.beta_after);
    if (t.fit) {
      o.influenced = influenced[fit_index++];
      if (!o.influenced && !o.met) report.infeasible.push_back(t.id);
      if (!o.met) report.unmet.push_back(t.id);
    }
    report.targets.push_back(std::move(o));
  }
  report.all_met = report.unmet.empty();
  return {std::move(out), std::move(report)};
}

CalibrationResult calibrate(const ModelBundle& bundle, const CalibrationOptions& options) {
  return calibrate(bundle, bundle.targets, options);
}

json CalibrationReport::to_json() const {
  json rows = json::array();
  for (const auto& o : targets) {
    json r = target_to_json(o.target);
    r["before"] = o.before;
    r["after"] = o.after;
    if (o.beta_after) {
      r["beta_before"] = *o.beta_before;
      r["beta_after"] = *o.beta_after;
    }
    r["residual"] = o.after - o.target.value;
    r["met"] = o.met;
    if (o.target.fit) r["feasible"] = o.influenced || o.met;
    r["status"] = o.met ? "met" : (!o.target.fit ? "reference-mismatch" : (o.influenced ? "unmet" : "infeasible"));
    rows.push_back(std::move(r));
  }
  return {{"sweeps", sweeps},         {"converged", converged}, {"all_met", all_met},
          {"free_cells", free_cells}, {"moved_cells", moved_cells}, {"targets", rows},
          {"unmet", unmet},           {"infeasible", infeasible}};
}

}  // namespace oobnlab
