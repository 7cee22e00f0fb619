#include "oobnlab/network_io.hpp"

#include <fstream>
#include <sstream>

#include "oobnlab/error.hpp"

namespace oobnlab {

using nlohmann::json;

namespace {

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key))
    throw Error(Errc::SchemaError, where + " is missing key '" + key + "'", {{"where", where}, {"key", key}});
  return obj.at(key);
}

}  // namespace

Variable variable_from_json(const json& j) {
  try {
    Variable v;
    v.name = require(j, "name", "variable").get<std::string>();
    v.states = require(j, "states", "variable '" + v.name + "'").get<std::vector<std::string>>();
    return v;
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaError, std::string("malformed variable: ") + e.what());
  }
}

json variable_to_json(const Variable& v) { return {{"name", v.name}, {"states", v.states}}; }

Cpt cpt_from_json(const std::string& child, const json& j) {
  try {
    Cpt cpt;
    cpt.child = child;
    cpt.parents = j.value("parents", std::vector<std::string>{});
    cpt.table = require(j, "table", "CPT of '" + child + "'").get<std::vector<std::vector<double>>>();
    return cpt;
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaError, "malformed CPT of '" + child + "': " + e.what(), {{"variable", child}});
  }
}

json cpt_to_json(const Cpt& cpt) { return {{"parents", cpt.parents}, {"table", cpt.table}}; }

Network network_from_json(const json& doc) {
  if (!doc.is_object()) throw Error(Errc::SchemaError, "network document must be a JSON object");
  std::vector<Variable> vars;
  for (const auto& v : require(doc, "variables", "network")) vars.push_back(variable_from_json(v));
  std::vector<Edge> edges;
  for (const auto& e : doc.value("edges", json::array())) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string())
      throw Error(Errc::SchemaError, "edges must be [parent, child] string pairs", {{"edge", e}});
    edges.push_back({e[0].get<std::string>(), e[1].get<std::string>()});
  }
  std::vector<Cpt> cpts;
  const json& cj = require(doc, "cpts", "network");
  if (!cj.is_object()) throw Error(Errc::SchemaError, "'cpts' must be an object keyed by variable name");
  for (const auto& [name, spec] : cj.items()) cpts.push_back(cpt_from_json(name, spec));
  return Network::build(std::move(vars), edges, cpts);
}

json network_to_json(const Network& net) {
  json vars = json::array();
  for (const auto& v : net.variables()) vars.push_back(variable_to_json(v));
  json edges = json::array();
  for (const auto& e : net.edges()) edges.push_back({e.parent, e.child});
  json cpts = json::object();
  for (VarId v = 0; v < net.size(); ++v) cpts[net.name(v)] = cpt_to_json(net.cpt(v));
  return {{"variables", vars}, {"edges", edges}, {"cpts", cpts}};
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open '" + path.string() + "'", {{"path", path.string()}});
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (text.find_first_not_of(" \t\r\n") == std::string::npos)
    throw Error(Errc::SchemaError, "'" + path.string() + "' is empty", {{"path", path.string()}});
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::SchemaError, "'" + path.string() + "' is not valid JSON: " + e.what(),
                {{"path", path.string()}, {"byte", e.byte}});
  }
}

void write_json_file(const json& doc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write '" + path.string() + "'", {{"path", path.string()}});
  out << doc.dump(2) << '\n';
}

Network load_network(const std::filesystem::path& path) { return network_from_json(read_json_file(path)); }

void save_network(const Network& net, const std::filesystem::path& path) {
  write_json_file(network_to_json(net), path);
}

}  // namespace oobnlab
