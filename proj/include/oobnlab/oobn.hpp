#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "oobnlab/inference.hpp"
#include "oobnlab/network.hpp"

namespace oobnlab {

// Where a CPT's numbers came from. Calibration only moves `elicited` tables.
enum class Provenance { Elicited, Learned, Calibrated, Deterministic };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

struct TemplateCpt {
  std::vector<std::string> parents;  // local node names or "instance.Output"
  std::vector<std::vector<double>> table;
  Provenance provenance = Provenance::Elicited;

  bool operator==(const TemplateCpt&) const = default;
};

struct InstanceSpec {
  std::string name;
  std::string template_name;

  bool operator==(const InstanceSpec&) const = default;
};

// Feeds input `instance.Input` of a child instance from a local node or from
// `sibling.Output` of another child instance.
struct BindingSpec {
  std::string input;
  std::string provider;

  bool operator==(const BindingSpec&) const = default;
};

enum class NodeRole { Input, Output, Private };

// A reusable sub-model. Inputs are placeholders (no CPT), outputs are visible
// to the enclosing template, private nodes are not.
struct OobnTemplate {
  std::string name;
  std::vector<Variable> inputs;
  std::vector<Variable> outputs;
  std::vector<Variable> privates;
  std::vector<Edge> edges;
  std::map<std::string, TemplateCpt> cpts;
  std::vector<InstanceSpec> instances;
  std::vector<BindingSpec> bindings;
  std::map<std::string, std::vector<double>> standin_priors;

  const Variable* node(std::string_view local) const;
  std::optional<NodeRole> role(std::string_view local) const;
  const InstanceSpec* instance(std::string_view name) const;

  bool operator==(const OobnTemplate&) const = default;
};

// Immutable once built; every template in it has been validated against the
// templates it instantiates.
class TemplateLibrary {
 public:
  // Validates and adds a template. Referenced templates must already be defined.
  // Throws InputHasCpt, OutputMissingCpt, UnknownTemplateReference, TemplateCycle,
  // SignatureMismatch, NotAnOutput, NameCollision and CPT shape errors.
  const OobnTemplate& define(OobnTemplate spec);

  // Defines a whole set in dependency order; instance cycles raise TemplateCycle.
  static TemplateLibrary from_templates(std::vector<OobnTemplate> specs);

  const OobnTemplate& at(std::string_view name) const;
  bool contains(std::string_view name) const { return templates_.find(name) != templates_.end(); }
  const std::map<std::string, OobnTemplate, std::less<>>& templates() const noexcept { return templates_; }

  // Copy with one template replaced (re-validated).
  TemplateLibrary with_template(OobnTemplate replacement) const;

 private:
  std::map<std::string, OobnTemplate, std::less<>> templates_;
};

// Throws SignatureMismatch unless `provider_output` and `consumer_input` have
// identical state lists (order-sensitive).
void check_binding(const OobnTemplate& provider, std::string_view provider_output, const OobnTemplate& consumer,
                   std::string_view consumer_input);

struct BindingReport {
  std::string owner;  // template declaring the binding
  BindingSpec binding;
  bool ok = true;
  std::string message;
};

// Checks every binding declared anywhere in the library.
std::vector<BindingReport> check_all_bindings(const TemplateLibrary& lib);

// Where a flattened variable came from.
struct NodeOrigin {
  std::string instance_path;  // "" for the top template, else "a.b."
  std::string template_name;
  std::string local_name;
  bool standin = false;  // root created from a stand-in prior (run_submodel only)
};

struct FlatModel {
  Network network;
  std::vector<NodeOrigin> origins;  // indexed by VarId
};

// Expands the instance tree of `top` into one network with "."-qualified
// instance-path names. Bound inputs are unified with their provider. Throws
// UnboundInput or NameCollision.
FlatModel flatten(const TemplateLibrary& lib, std::string_view top);

// Flattens a single template, replacing its own unbound inputs with root nodes
// carrying the template's stand-in priors. Throws MissingStandInPrior.
FlatModel flatten_standalone(const TemplateLibrary& lib, std::string_view name);

std::map<std::string, Posterior> run_submodel(const TemplateLibrary& lib, std::string_view name,
                                              const Evidence& evidence);

OobnTemplate template_from_json(const std::string& name, const nlohmann::json& j);
nlohmann::json template_to_json(const OobnTemplate& t);
TemplateLibrary library_from_json(const nlohmann::json& templates);
nlohmann::json library_to_json(const TemplateLibrary& lib);

}  // namespace oobnlab
