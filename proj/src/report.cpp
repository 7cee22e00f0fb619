#include "oobnlab/report.hpp"

#include <cmath>
#include <functional>
#include <set>

#include "oobnlab/error.hpp"
#include "oobnlab/sensitivity.hpp"

namespace oobnlab {

using nlohmann::json;

json round_numbers(const json& doc, int digits) {
  if (doc.is_number_float()) {
    const double scale = std::pow(10.0, digits);
    const double r = std::round(doc.get<double>() * scale) / scale;
    return r == 0.0 ? 0.0 : r;  // no negative zero
  }
  if (doc.is_array()) {
    json out = json::array();
    for (const auto& x : doc) out.push_back(round_numbers(x, digits));
    return out;
  }
  if (doc.is_object()) {
    json out = json::object();
    for (const auto& [k, v] : doc.items()) out[k] = round_numbers(v, digits);
    return out;
  }
  return doc;
}

std::string render(const json& doc, Precision precision) {
  return (precision == Precision::Full ? doc : round_numbers(doc)).dump(2) + "\n";
}

namespace {

json posteriors_json(const std::vector<Posterior>& posteriors) {
  json out = json::object();
  for (const auto& p : posteriors) {
    json states = json::object();
    for (std::size_t i = 0; i < p.states.size(); ++i) states[p.states[i]] = p.probabilities[i];
    out[p.variable] = states;
  }
  return out;
}

json headlines_json(const std::vector<Headline>& hs) {
  json out = json::object();
  for (const auto& h : hs) out[h.label] = {{"variable", h.variable}, {"state", h.state}, {"probability", h.value}};
  return out;
}

}  // namespace

json model_report(const ModelBundle& bundle) {
  const Network& net = bundle.network();
  json vars = json::array();
  for (VarId v = 0; v < net.size(); ++v) {
    const auto& o = bundle.flat.origins[v];
    json parents = json::array();
    for (VarId p : net.parents(v)) parents.push_back(net.name(p));
    json entry = {{"name", net.name(v)},
                  {"local_name", o.local_name},
                  {"template", o.template_name},
                  {"instance", o.instance_path.empty() ? "" : o.instance_path.substr(0, o.instance_path.size() - 1)},
                  {"states", net.variable(v).states},
                  {"parents", parents},
                  {"provenance", to_string(bundle.library.at(o.template_name).cpts.at(o.local_name).provenance)}};
    if (auto m = bundle.variables.find(o.local_name); m != bundle.variables.end()) {
      if (!m->second.submodel.empty()) entry["submodel"] = m->second.submodel;
      entry["ordinal"] = m->second.ordinal;
      if (m->second.bins) entry["bins"] = bins_to_json(*m->second.bins);
    }
    vars.push_back(std::move(entry));
  }
  json presets = json::array();
  for (const auto& p : bundle.presets)
    presets.push_back({{"name", p.name}, {"description", p.description}, {"evidence", p.evidence}, {"expect", p.expect}});
  json headline = bundle.metadata.value("headline", json::array());
  return {{"model", bundle.metadata.value("model", std::string{})},
          {"top", bundle.top},
          {"model_hash", model_hash(bundle)},
          {"variables", vars},
          {"presets", presets},
          {"headline", headline}};
}

json infer_report(const ModelBundle& bundle, const Evidence& evidence) {
  const ScenarioResult r = run_evidence(bundle, evidence);
  return {{"model_hash", model_hash(bundle)},
          {"evidence", r.given},
          {"resolved_evidence", r.evidence},
          {"probability_of_evidence", r.probability_of_evidence},
          {"posteriors", posteriors_json(r.posteriors)}};
}

json scenario_report(const ModelBundle& bundle, const ScenarioRequest& req) {
  const ScenarioResult r = req.preset ? run_scenario(bundle, *req.preset) : run_evidence(bundle, req.evidence);
  json out = {{"scenario", r.name},
              {"model_hash", model_hash(bundle)},
              {"evidence", r.given},
              {"resolved_evidence", r.evidence},
              {"probability_of_evidence", r.probability_of_evidence},
              {"headline", headlines_json(r.headlines)},
              {"posteriors", posteriors_json(r.posteriors)}};
  if (req.compare) {
    const ScenarioResult base = run_scenario(bundle, *req.compare);
    json changes = json::object();
    for (const auto& c : compare(r, base))
      changes[c.label] = {{"baseline", c.baseline},
                          {"scenario", c.value},
                          {"absolute_change", c.absolute},
                          {"relative_change", c.relative ? json(*c.relative) : json(nullptr)}};
    out["comparison"] = {{"against", *req.compare}, {"changes", changes}};
  }
  return out;
}

json sensitivity_report(const ModelBundle& bundle, const SensitivityRequest& req) {
  const Network& net = bundle.network();
  auto [var, state] = parse_finding(req.hypothesis);
  const Hypothesis hyp{resolve_name(net, var), state};
  net.state_index(net.id(hyp.variable), hyp.state);
  Evidence ev;
  std::string scenario = "none";
  if (req.scenario && *req.scenario != "none") {
    scenario = *req.scenario;
    ev = bundle.scenario_evidence(scenario, req.evidence);
  } else {
    ev = resolve_names(net, req.evidence);
  }
  if (ev.count(hyp.variable))
    throw Error(Errc::HypothesisObserved, "hypothesis variable '" + hyp.variable + "' is observed in the scenario",
                {{"variable", hyp.variable}});

  const auto ranked = rank_parameters(net, hyp, ev);
  json params = json::array();
  const std::size_t n = req.top == 0 ? ranked.size() : std::min(req.top, ranked.size());
  for (std::size_t i = 0; i < n; ++i) params.push_back(to_json(ranked[i], net));
  json out = {{"model_hash", model_hash(bundle)},
              {"hypothesis", {{"variable", hyp.variable}, {"state", hyp.state}}},
              {"scenario", scenario},
              {"evidence", ev},
              {"posterior", marginal(net, hyp.variable, ev).at(hyp.state)},
              {"parameters_ranked", ranked.size()},
              {"parameter_sensitivity", params}};
  if (req.evidence_sensitivity) {
    json ranges = json::array();
    for (const auto& r : evidence_sensitivity_ranges(net, hyp, ev)) ranges.push_back(to_json(r));
    out["evidence_sensitivity"] = ranges;
  }
  return out;
}

std::vector<json> validate_bundle_json(const json& doc) {
  std::vector<json> diags;
  auto record = [&](const Error& e, json where = json::object()) {
    json d = e.to_json();
    if (!where.empty()) d["where"] = std::move(where);
    for (const auto& seen : diags)
      if (seen["error"] == d["error"] && seen["message"] == d["message"]) return;
    diags.push_back(std::move(d));
  };
  if (!doc.is_object() || !doc.contains("templates") || !doc["templates"].is_object()) {
    record(Error(Errc::SchemaError, "bundle must be an object with a 'templates' object"));
    return diags;
  }

  std::map<std::string, OobnTemplate> parsed;
  for (const auto& [name, spec] : doc["templates"].items()) {
    try {
      parsed.emplace(name, template_from_json(name, spec));
    } catch (const Error& e) {
      record(e, {{"template", name}});
    }
  }
  // Check each template together with what it instantiates, so one broken
  // template does not hide problems in the others.
  for (const auto& [name, _] : parsed) {
    std::vector<OobnTemplate> closure;
    std::set<std::string> seen;
    std::function<void(const std::string&)> collect = [&](const std::string& n) {
      auto it = parsed.find(n);
      if (it == parsed.end() || !seen.insert(n).second) return;
      closure.push_back(it->second);
      for (const auto& inst : it->second.instances) collect(inst.template_name);
    };
    collect(name);
    try {
      TemplateLibrary::from_templates(std::move(closure));
    } catch (const Error& e) {
      record(e, {{"template", name}});
    }
  }
  if (diags.empty()) {
    try {
      bundle_from_json(doc);
    } catch (const Error& e) {
      record(e);
    }
  }
  return diags;
}

}  // namespace oobnlab
