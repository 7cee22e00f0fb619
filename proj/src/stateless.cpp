#include "oobnlab/stateless.hpp"

#include <algorithm>
#include <set>

#include "oobnlab/error.hpp"

namespace oobnlab {

using nlohmann::json;

const std::vector<InventoryEntry>& stateless_inventory() {
  const std::vector<std::string> lmh = {"low", "medium", "high"};
  const std::vector<std::string> regions = {"europe", "northAmerica", "china", "restOfAsia", "restOfWorld"};
  static const std::vector<InventoryEntry> inventory = {
      {"EthereumNetwork", "EthereumNodeType", NodeRole::Output, {"miner", "semiStateless"}, false},
      {"EthereumNetwork", "NodeBandwidth", NodeRole::Output, lmh, true},
      {"EthereumNetwork", "NetworkLatency", NodeRole::Output, lmh, true},
      {"EthereumNetwork", "NodeLocation", NodeRole::Private, regions, false},
      {"EthereumNetwork", "PeerLocation", NodeRole::Private, regions, false},
      {"BlockCreation", "Difficulty", NodeRole::Output, lmh, true},
      {"BlockCreation", "BlockGasLimit", NodeRole::Private, lmh, true},
      {"BlockCreation", "TransactionsPerBlock", NodeRole::Private, lmh, true},
      {"BlockCreation", "StateEntriesUpdated", NodeRole::Output, lmh, true},
      {"BlockCreation", "BlockCreationTime", NodeRole::Output, lmh, true},
      {"WitnessCreation", "WitnessSize", NodeRole::Private, {"small", "medium", "large", "veryLarge"}, true},
      {"WitnessCreation", "WitnessCreationTime", NodeRole::Output, lmh, true},
      {"BlockPropagation", "UncleRate", NodeRole::Output, {"low", "high"}, true},
      {"BlockPropagation", "BlockPropagationTime", NodeRole::Private, lmh, true},
      {"BlockPropagation", "BlockAndWitnessProcessingTime", NodeRole::Private, lmh, true},
      {"BlockPropagation", "NodeStatus", NodeRole::Private, {"upToDate", "syncing", "stateOffline"}, false},
      {"BlockPropagation", "NodeKeepsUpWithHeadOfChain", NodeRole::Output, {"yes", "no"}, false},
      {"StatelessEthereum", "EthereumEcosystem", NodeRole::Output, {"healthy", "unhealthy"}, false},
  };
  return inventory;
}

void check_stateless_inventory(const ModelBundle& bundle) {
  const Network& net = bundle.network();
  const auto& inv = stateless_inventory();
  auto fail = [](const std::string& msg, json detail = json::object()) {
    throw Error(Errc::InventoryMismatch, msg, std::move(detail));
  };
  if (net.size() != inv.size())
    fail("model flattens to " + std::to_string(net.size()) + " variables, expected " + std::to_string(inv.size()),
         {{"variables", net.size()}, {"expected", inv.size()}});

  std::map<std::string, VarId> by_local;
  for (VarId v = 0; v < net.size(); ++v) {
    const auto& origin = bundle.flat.origins[v];
    if (!by_local.emplace(origin.local_name, v).second)
      fail("local name '" + origin.local_name + "' occurs twice in the flattened model");
  }
  for (const auto& e : inv) {
    auto it = by_local.find(e.name);
    if (it == by_local.end()) fail(std::string("variable '") + e.name + "' is missing", {{"variable", e.name}});
    const VarId v = it->second;
    const auto& origin = bundle.flat.origins[v];
    if (origin.template_name != e.template_name)
      fail(std::string("variable '") + e.name + "' belongs to '" + origin.template_name + "', expected '" +
               e.template_name + "'",
           {{"variable", e.name}});
    if (net.variable(v).states != e.states)
      fail(std::string("states of '") + e.name + "' differ from the inventory",
           {{"variable", e.name}, {"states", net.variable(v).states}, {"expected", e.states}});
    if (bundle.library.at(e.template_name).role(e.name) != e.role)
      fail(std::string("'") + e.name + "' has the wrong interface role in '" + e.template_name + "'",
           {{"variable", e.name}});
    if (e.continuous) {
      auto m = bundle.variables.find(e.name);
      if (m == bundle.variables.end() || !m->second.bins)
        fail(std::string("continuous variable '") + e.name + "' has no bin metadata", {{"variable", e.name}});
      if (m->second.bins->states != e.states)
        fail(std::string("bin states of '") + e.name + "' differ from the inventory", {{"variable", e.name}});
    }
  }
  // WitnessSize stays private to WitnessCreation.
  for (const auto& [name, t] : bundle.library.templates()) {
    const auto role = t.role("WitnessSize");
    if (role && (name != "WitnessCreation" || *role != NodeRole::Private))
      fail("WitnessSize is visible in the interface of '" + name + "'");
  }
  const VarId eco = by_local.at("EthereumEcosystem");
  std::set<std::string> parents;
  for (VarId p : net.parents(eco)) parents.insert(bundle.flat.origins[p].local_name);
  if (parents != std::set<std::string>{"NodeKeepsUpWithHeadOfChain", "UncleRate"})
    fail("EthereumEcosystem must have exactly the parents NodeKeepsUpWithHeadOfChain and UncleRate");
}

const std::vector<std::string>& block_witness_columns() {
  static const std::vector<std::string> cols = {"block_number",          "difficulty",
                                                "gas_limit",             "tx_count",
                                                "state_entries_updated", "block_creation_time_s",
                                                "witness_size_bytes",    "witness_creation_time_s"};
  return cols;
}

Dataset ingest_block_witness_csv(const CsvTable& csv, const ModelBundle& bundle) {
  for (const auto& c : block_witness_columns()) csv.column(c);
  json columns = json::array();
  for (const auto& [name, meta] : bundle.variables) {
    if (meta.source_column.empty()) continue;
    if (!meta.bins)
      throw Error(Errc::SchemaError, "learned variable '" + name + "' has no bins", {{"variable", name}});
    columns.push_back({{"name", name}, {"source", meta.source_column}, {"bins", bins_to_json(*meta.bins)}});
  }
  if (columns.empty()) throw Error(Errc::SchemaError, "bundle metadata maps no variable to a data column");
  return dataset_from_csv(csv, {{"columns", columns}});
}

Dataset ingest_block_witness_csv(const std::filesystem::path& path, const ModelBundle& bundle) {
  return ingest_block_witness_csv(read_csv(path), bundle);
}

LearnResult learn_bundle(const ModelBundle& bundle, const Dataset& data, double smoothing) {
  LearnResult result;
  result.records = data.rows();
  result.smoothing = smoothing;
  std::vector<OobnTemplate> templates;
  auto has_column = [&](const std::string& n) {
    return std::any_of(data.columns().begin(), data.columns().end(), [&](const Variable& v) { return v.name == n; });
  };
  auto local_of = [](const std::string& ref) {
    const auto dot = ref.find('.');
    return dot == std::string::npos ? ref : ref.substr(dot + 1);
  };
  for (const auto& [name, t] : bundle.library.templates()) {
    OobnTemplate copy = t;
    for (auto& [node, cpt] : copy.cpts) {
      if (cpt.provenance != Provenance::Learned || !has_column(node)) continue;
      if (!std::all_of(cpt.parents.begin(), cpt.parents.end(), [&](const auto& p) { return has_column(local_of(p)); }))
        continue;
      Skeleton family;
      for (const auto& p : cpt.parents) {
        family.variables.push_back(data.columns()[data.column(local_of(p))]);
        family.edges.push_back({local_of(p), node});
      }
      family.variables.push_back(*copy.node(node));
      const auto learned = mle_cpts(family, data, smoothing);
      cpt.table = learned.back().table;
      result.learned.push_back({name, node, cpt.table.size()});
    }
    for (const auto& s : bundle.sums) {
      if (s.template_name != name) continue;
      auto bins = [&](const std::string& n) { return *bundle.variables.at(n).bins; };
      auto& cpt = copy.cpts.at(s.node);
      cpt.parents = s.operands;
      cpt.table = deterministic_sum_cpt(bins(s.operands[0]), bins(s.operands[1]), bins(s.node));
      cpt.provenance = Provenance::Deterministic;
    }
    templates.push_back(std::move(copy));
  }
  result.bundle = with_library(bundle, TemplateLibrary::from_templates(std::move(templates)));
  return result;
}

namespace {

std::vector<Headline> headlines_for(const ModelBundle& bundle, const std::vector<Posterior>& posteriors) {
  std::vector<Headline> out;
  for (const auto& h : bundle.metadata.value("headline", json::array())) {
    auto [var, state] = parse_finding(h.at("query").get<std::string>());
    const std::string full = resolve_name(bundle.network(), var);
    const VarId v = bundle.network().id(full);
    out.push_back({h.at("label").get<std::string>(), full, state, posteriors[v].at(state)});
  }
  return out;
}

}  // namespace

ScenarioResult run_evidence(const ModelBundle& bundle, const Evidence& evidence, std::string name) {
  ScenarioResult r;
  r.name = std::move(name);
  r.given = evidence;
  r.evidence = resolve_names(bundle.network(), evidence);
  const auto ev = resolve_evidence(bundle.network(), r.evidence);
  r.probability_of_evidence = probability_of_evidence(bundle.network(), ev);
  if (!(r.probability_of_evidence > 0.0))
    throw Error(Errc::ZeroProbabilityEvidence, "the evidence has probability zero under the model",
                {{"evidence", r.evidence}});
  r.posteriors = posterior_all(bundle.network(), ev);
  r.headlines = headlines_for(bundle, r.posteriors);
  return r;
}

ScenarioResult run_scenario(const ModelBundle& bundle, std::string_view preset) {
  return run_evidence(bundle, bundle.preset(preset).evidence, std::string(preset));
}

std::vector<HeadlineChange> compare(const ScenarioResult& result, const ScenarioResult& baseline) {
  std::vector<HeadlineChange> out;
  for (const auto& h : result.headlines) {
    auto it = std::find_if(baseline.headlines.begin(), baseline.headlines.end(),
                           [&](const Headline& b) { return b.label == h.label; });
    if (it == baseline.headlines.end()) continue;
    HeadlineChange c{h.label, it->value, h.value, h.value - it->value, std::nullopt};
    if (it->value != 0.0) c.relative = (h.value - it->value) / it->value;
    out.push_back(c);
  }
  return out;
}

}  // namespace oobnlab
