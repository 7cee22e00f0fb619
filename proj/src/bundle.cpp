#include "oobnlab/bundle.hpp"

#include <cstdio>

#include "oobnlab/error.hpp"
#include "oobnlab/network_io.hpp"
#include "oobnlab/stateless.hpp"

namespace oobnlab {

using nlohmann::json;

const Preset& ModelBundle::preset(std::string_view name) const {
  for (const auto& p : presets)
    if (p.name == name) return p;
  json known = json::array();
  for (const auto& p : presets) known.push_back(p.name);
  throw Error(Errc::UnknownPreset, "no scenario preset named '" + std::string(name) + "'",
              {{"preset", name}, {"known", known}});
}

Evidence ModelBundle::scenario_evidence(std::string_view preset_name, const Evidence& extra) const {
  Evidence ev = resolve_names(network(), preset(preset_name).evidence);
  for (const auto& [k, v] : resolve_names(network(), extra)) ev[k] = v;
  return ev;
}

std::string resolve_name(const Network& net, std::string_view name) {
  if (net.find(name)) return std::string(name);
  const std::string suffix = "." + std::string(name);
  std::vector<std::string> hits;
  for (const auto& v : net.variables())
    if (v.name.size() > suffix.size() && v.name.compare(v.name.size() - suffix.size(), suffix.size(), suffix) == 0)
      hits.push_back(v.name);
  if (hits.empty()) throw Error(Errc::UnknownVariable, "unknown variable '" + std::string(name) + "'", {{"variable", name}});
  if (hits.size() > 1)
    throw Error(Errc::AmbiguousName, "variable name '" + std::string(name) + "' is ambiguous",
                {{"variable", name}, {"candidates", hits}});
  return hits.front();
}

Evidence resolve_names(const Network& net, const Evidence& evidence) {
  Evidence out;
  for (const auto& [k, v] : evidence) {
    const std::string full = resolve_name(net, k);
    net.state_index(net.id(full), v);
    if (auto it = out.find(full); it != out.end() && it->second != v)
      throw Error(Errc::InvalidArgument, "conflicting findings for '" + full + "'", {{"variable", full}});
    out[full] = v;
  }
  return out;
}

std::pair<std::string, std::string> parse_finding(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos || eq == 0 || eq + 1 == text.size())
    throw Error(Errc::InvalidArgument, "expected Variable=state, got '" + std::string(text) + "'",
                {{"finding", text}});
  return {std::string(text.substr(0, eq)), std::string(text.substr(eq + 1))};
}

namespace {

const char* kind_name(TargetKind k) {
  switch (k) {
    case TargetKind::Posterior: return "posterior";
    case TargetKind::EvidenceProbability: return "evidence_probability";
    case TargetKind::SensitivityFunction: return "sensitivity_function";
  }
  return "posterior";
}

}  // namespace

CalibrationTarget target_from_json(const json& j) {
  try {
    CalibrationTarget t;
    t.id = j.at("id").get<std::string>();
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "posterior")
      t.kind = TargetKind::Posterior;
    else if (kind == "evidence_probability")
      t.kind = TargetKind::EvidenceProbability;
    else if (kind == "sensitivity_function")
      t.kind = TargetKind::SensitivityFunction;
    else
      throw Error(Errc::SchemaError, "unknown calibration target kind '" + kind + "'", {{"id", t.id}});
    if (t.kind != TargetKind::EvidenceProbability)
      std::tie(t.variable, t.state) = parse_finding(j.at("query").get<std::string>());
    t.preset = j.value("preset", std::string("base"));
    t.evidence = j.value("evidence", Evidence{});
    t.value = t.kind == TargetKind::SensitivityFunction ? j.at("alpha").get<double>() : j.at("value").get<double>();
    if (t.kind == TargetKind::SensitivityFunction) {
      t.beta = j.at("beta").get<double>();
      const auto& p = j.at("parameter");
      t.parameter = ParameterSpec{p.at("variable").get<std::string>(), p.value("parents", Assignment{}),
                                  p.at("state").get<std::string>()};
    }
    t.tolerance = j.at("tolerance").get<double>();
    t.fit = j.value("fit", t.kind != TargetKind::SensitivityFunction);
    t.note = j.value("note", std::string{});
    if (!(t.tolerance > 0.0)) throw Error(Errc::SchemaError, "target tolerance must be positive", {{"id", t.id}});
    if (t.fit && t.kind == TargetKind::SensitivityFunction)
      throw Error(Errc::SchemaError, "sensitivity-function targets are reference-only", {{"id", t.id}});
    return t;
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaError, std::string("malformed calibration target: ") + e.what());
  }
}

json target_to_json(const CalibrationTarget& t) {
  json j = {{"id", t.id}, {"kind", kind_name(t.kind)}};
  if (t.kind != TargetKind::EvidenceProbability) j["query"] = t.variable + "=" + t.state;
  j["preset"] = t.preset;
  if (!t.evidence.empty()) j["evidence"] = t.evidence;
  if (t.kind == TargetKind::SensitivityFunction) {
    j["parameter"] = {{"variable", t.parameter->variable}, {"parents", t.parameter->parents}, {"state", t.parameter->state}};
    j["alpha"] = t.value;
    j["beta"] = t.beta;
  } else {
    j["value"] = t.value;
  }
  j["tolerance"] = t.tolerance;
  j["fit"] = t.fit;
  if (!t.note.empty()) j["note"] = t.note;
  return j;
}

namespace {

void parse_metadata(ModelBundle& b) {
  const json& meta = b.metadata;
  if (!meta.is_object()) throw Error(Errc::SchemaError, "'metadata' must be an object");
  try {
    const json variables = meta.value("variables", json::object());
    for (const auto& [name, v] : variables.items()) {
      VariableMeta m;
      m.submodel = v.value("submodel", std::string{});
      m.ordinal = v.value("ordinal", false);
      if (v.contains("bins")) m.bins = bins_from_json(v["bins"]);
      m.source_column = v.value("source_column", std::string{});
      b.variables.emplace(name, std::move(m));
    }
    for (const auto& s : meta.value("deterministic_sums", json::array()))
      b.sums.push_back({s.at("template").get<std::string>(), s.at("node").get<std::string>(),
                        s.at("operands").get<std::vector<std::string>>()});
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaError, std::string("malformed metadata: ") + e.what());
  }
}

void check_sums(const ModelBundle& b) {
  for (const auto& s : b.sums) {
    if (s.operands.size() != 2)
      throw Error(Errc::SchemaError, "deterministic sum '" + s.node + "' needs exactly two operands");
    const OobnTemplate& t = b.library.at(s.template_name);
    auto it = t.cpts.find(s.node);
    if (it == t.cpts.end()) throw Error(Errc::SchemaError, "deterministic sum node '" + s.node + "' has no CPT");
    auto bins = [&](const std::string& n) -> const BinSpec& {
      auto m = b.variables.find(n);
      if (m == b.variables.end() || !m->second.bins)
        throw Error(Errc::SchemaError, "deterministic sum needs bin metadata for '" + n + "'", {{"variable", n}});
      return *m->second.bins;
    };
    const auto expected = deterministic_sum_cpt(bins(s.operands[0]), bins(s.operands[1]), bins(s.node));
    if (it->second.parents != s.operands || it->second.table != expected)
      throw Error(Errc::SchemaError, "CPT of '" + s.node + "' is not the deterministic sum of its operands",
                  {{"node", s.node}});
    if (it->second.provenance != Provenance::Deterministic)
      throw Error(Errc::SchemaError, "deterministic sum '" + s.node + "' must carry provenance 'deterministic'");
  }
}

void check_presets_and_targets(const ModelBundle& b) {
  std::set<std::string> names;
  for (const auto& p : b.presets) {
    if (!names.insert(p.name).second)
      throw Error(Errc::DuplicateName, "preset '" + p.name + "' defined twice", {{"preset", p.name}});
    resolve_names(b.network(), p.evidence);
  }
  std::set<std::string> ids;
  for (const auto& t : b.targets) {
    if (!ids.insert(t.id).second) throw Error(Errc::DuplicateName, "target '" + t.id + "' defined twice");
    b.scenario_evidence(t.preset, t.evidence);
    if (t.kind != TargetKind::EvidenceProbability) {
      const VarId v = b.network().id(resolve_name(b.network(), t.variable));
      b.network().state_index(v, t.state);
    }
  }
}

}  // namespace

ModelBundle bundle_from_json(const json& doc) {
  if (!doc.is_object()) throw Error(Errc::SchemaError, "bundle must be a JSON object");
  if (!doc.contains("templates")) throw Error(Errc::SchemaError, "bundle has no 'templates'");
  if (!doc.contains("top") || !doc["top"].is_string()) throw Error(Errc::SchemaError, "bundle has no 'top' template name");
  ModelBundle b;
  b.library = library_from_json(doc["templates"]);
  b.top = doc["top"].get<std::string>();
  b.metadata = doc.value("metadata", json::object());
  parse_metadata(b);
  try {
    for (const auto& p : doc.value("presets", json::array()))
      b.presets.push_back({p.at("name").get<std::string>(), p.value("description", std::string{}),
                           p.value("evidence", Evidence{}), p.value("expect", std::map<std::string, std::string>{})});
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaError, std::string("malformed preset: ") + e.what());
  }
  for (const auto& t : doc.value("calibration_targets", json::array())) b.targets.push_back(target_from_json(t));

  b.flat = flatten(b.library, b.top);
  check_sums(b);
  check_presets_and_targets(b);
  if (b.metadata.value("model", std::string{}) == kStatelessModelName) check_stateless_inventory(b);
  return b;
}

json bundle_to_json(const ModelBundle& b) {
  json presets = json::array();
  for (const auto& p : b.presets)
    presets.push_back({{"name", p.name}, {"description", p.description}, {"evidence", p.evidence}, {"expect", p.expect}});
  json targets = json::array();
  for (const auto& t : b.targets) targets.push_back(target_to_json(t));
  return {{"format", "oobn-lab/1"},
          {"top", b.top},
          {"metadata", b.metadata},
          {"templates", library_to_json(b.library)},
          {"presets", presets},
          {"calibration_targets", targets}};
}

ModelBundle load_bundle(const std::filesystem::path& path) { return bundle_from_json(read_json_file(path)); }

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path) {
  write_json_file(bundle_to_json(bundle), path);
}

ModelBundle with_library(const ModelBundle& bundle, TemplateLibrary library) {
  ModelBundle out = bundle;
  out.library = std::move(library);
  out.flat = flatten(out.library, out.top);
  check_sums(out);
  return out;
}

std::string model_hash(const ModelBundle& bundle) {
  const std::string text = bundle_to_json(bundle).dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace oobnlab
