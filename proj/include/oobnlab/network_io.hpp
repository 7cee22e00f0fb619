#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "oobnlab/network.hpp"

namespace oobnlab {

// Network file format:
//   {"variables": [{"name": ..., "states": [...]}, ...],
//    "edges": [[parent, child], ...],
//    "cpts": {name: {"parents": [...], "table": [[...], ...]}}}
// Table rows follow the parent configuration order with the last parent varying fastest.
Network network_from_json(const nlohmann::json& doc);
nlohmann::json network_to_json(const Network& net);

Network load_network(const std::filesystem::path& path);
void save_network(const Network& net, const std::filesystem::path& path);

// Shared helpers for the bundle and dataset formats.
Variable variable_from_json(const nlohmann::json& j);
nlohmann::json variable_to_json(const Variable& v);
Cpt cpt_from_json(const std::string& child, const nlohmann::json& j);
nlohmann::json cpt_to_json(const Cpt& cpt);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const nlohmann::json& doc, const std::filesystem::path& path);

}  // namespace oobnlab
