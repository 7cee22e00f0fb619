#include "oobnlab/oobn.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <set>

#include "oobnlab/error.hpp"
#include "oobnlab/network_io.hpp"

namespace oobnlab {

using nlohmann::json;

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Elicited: return "elicited";
    case Provenance::Learned: return "learned";
    case Provenance::Calibrated: return "calibrated";
    case Provenance::Deterministic: return "deterministic";
  }
  return "elicited";
}

Provenance provenance_from_string(std::string_view s) {
  if (s == "elicited") return Provenance::Elicited;
  if (s == "learned") return Provenance::Learned;
  if (s == "calibrated") return Provenance::Calibrated;
  if (s == "deterministic") return Provenance::Deterministic;
  throw Error(Errc::SchemaError, "unknown provenance tag '" + std::string(s) + "'", {{"provenance", s}});
}

const Variable* OobnTemplate::node(std::string_view local) const {
  for (const auto* group : {&inputs, &outputs, &privates})
    for (const auto& v : *group)
      if (v.name == local) return &v;
  return nullptr;
}

std::optional<NodeRole> OobnTemplate::role(std::string_view local) const {
  auto has = [&](const std::vector<Variable>& g) {
    return std::any_of(g.begin(), g.end(), [&](const Variable& v) { return v.name == local; });
  };
  if (has(inputs)) return NodeRole::Input;
  if (has(outputs)) return NodeRole::Output;
  if (has(privates)) return NodeRole::Private;
  return std::nullopt;
}

const InstanceSpec* OobnTemplate::instance(std::string_view n) const {
  for (const auto& i : instances)
    if (i.name == n) return &i;
  return nullptr;
}

namespace {

std::pair<std::string, std::string> split_ref(const std::string& ref) {
  auto dot = ref.find('.');
  if (dot == std::string::npos) return {"", ref};
  return {ref.substr(0, dot), ref.substr(dot + 1)};
}

}  // namespace

void check_binding(const OobnTemplate& provider, std::string_view provider_output, const OobnTemplate& consumer,
                   std::string_view consumer_input) {
  const Variable* out = provider.node(provider_output);
  const Variable* in = consumer.node(consumer_input);
  if (!out)
    throw Error(Errc::UnknownVariable,
                "template '" + provider.name + "' has no node '" + std::string(provider_output) + "'");
  if (!in)
    throw Error(Errc::UnknownVariable,
                "template '" + consumer.name + "' has no node '" + std::string(consumer_input) + "'");
  if (consumer.role(consumer_input) != NodeRole::Input)
    throw Error(Errc::InvalidArgument, "'" + consumer.name + "." + std::string(consumer_input) + "' is not an input node");
  if (out->states != in->states)
    throw Error(Errc::SignatureMismatch,
                "state signature of '" + provider.name + "." + out->name + "' does not match input '" + consumer.name +
                    "." + in->name + "'",
                {{"provider", provider.name + "." + out->name},
                 {"provider_states", out->states},
                 {"input", consumer.name + "." + in->name},
                 {"input_states", in->states}});
}

namespace {

void check_table(const std::string& where, const std::vector<std::vector<double>>& table, std::size_t rows,
                 std::size_t cols) {
  if (table.size() != rows)
    throw Error(Errc::CptShapeMismatch, "CPT of '" + where + "' has " + std::to_string(table.size()) +
                                            " rows, expected " + std::to_string(rows),
                {{"variable", where}, {"rows", table.size()}, {"expected_rows", rows}});
  for (std::size_t r = 0; r < rows; ++r) {
    if (table[r].size() != cols)
      throw Error(Errc::CptShapeMismatch, "CPT of '" + where + "' row " + std::to_string(r) + " has wrong width",
                  {{"variable", where}, {"row", r}});
    double sum = 0.0;
    for (double p : table[r]) {
      if (!std::isfinite(p) || p < 0.0 || p > 1.0)
        throw Error(Errc::RowNotNormalized, "CPT of '" + where + "' has entry outside [0,1]",
                    {{"variable", where}, {"row", r}, {"value", p}});
      sum += p;
    }
    if (std::abs(sum - 1.0) > kNormalizationTolerance)
      throw Error(Errc::RowNotNormalized,
                  "CPT of '" + where + "' row " + std::to_string(r) + " sums to " + std::to_string(sum),
                  {{"variable", where}, {"row", r}, {"sum", sum}});
  }
}

}  // namespace

const OobnTemplate& TemplateLibrary::define(OobnTemplate spec) {
  const std::string& tname = spec.name;
  if (tname.empty() || tname.find('.') != std::string::npos)
    throw Error(Errc::InvalidVariable, "template name must be nonempty and contain no '.'", {{"template", tname}});
  if (contains(tname)) throw Error(Errc::NameCollision, "template '" + tname + "' already defined", {{"template", tname}});

  std::set<std::string> names;
  for (const auto* group : {&spec.inputs, &spec.outputs, &spec.privates})
    for (const auto& v : *group) {
      if (v.name.empty() || v.name.find('.') != std::string::npos)
        throw Error(Errc::InvalidVariable, "node names must be nonempty and contain no '.'",
                    {{"template", tname}, {"node", v.name}});
      if (v.states.size() < 2)
        throw Error(Errc::InvalidVariable, "node '" + v.name + "' needs at least two states",
                    {{"template", tname}, {"node", v.name}});
      if (!names.insert(v.name).second)
        throw Error(Errc::NameCollision, "node '" + v.name + "' declared twice in '" + tname + "'",
                    {{"template", tname}, {"node", v.name}});
    }
  for (const auto& inst : spec.instances) {
    if (inst.name.empty() || inst.name.find('.') != std::string::npos || !names.insert(inst.name).second)
      throw Error(Errc::NameCollision, "instance name '" + inst.name + "' is invalid or collides in '" + tname + "'",
                  {{"template", tname}, {"instance", inst.name}});
    if (inst.template_name == tname)
      throw Error(Errc::TemplateCycle, "template '" + tname + "' instantiates itself",
                  {{"template", tname}, {"cycle", {tname, tname}}});
    if (!contains(inst.template_name))
      throw Error(Errc::UnknownTemplateReference,
                  "instance '" + inst.name + "' of '" + tname + "' references undefined template '" +
                      inst.template_name + "'",
                  {{"template", tname}, {"instance", inst.name}, {"referenced", inst.template_name}});
  }

  // Resolves a reference usable as a parent or binding provider.
  auto provider_var = [&](const std::string& ref) -> const Variable& {
    auto [inst_name, local] = split_ref(ref);
    if (inst_name.empty()) {
      const Variable* v = spec.node(local);
      if (!v)
        throw Error(Errc::DanglingReference, "'" + tname + "' references unknown node '" + ref + "'",
                    {{"template", tname}, {"reference", ref}});
      return *v;
    }
    const InstanceSpec* inst = spec.instance(inst_name);
    if (!inst)
      throw Error(Errc::DanglingReference, "'" + tname + "' references unknown instance in '" + ref + "'",
                  {{"template", tname}, {"reference", ref}});
    const OobnTemplate& child = at(inst->template_name);
    auto r = child.role(local);
    if (!r)
      throw Error(Errc::DanglingReference, "'" + ref + "' does not name a node of '" + child.name + "'",
                  {{"template", tname}, {"reference", ref}});
    if (*r != NodeRole::Output)
      throw Error(Errc::NotAnOutput, "'" + ref + "' is not an output node of '" + child.name + "'",
                  {{"template", tname}, {"reference", ref}});
    return *child.node(local);
  };

  std::map<std::string, std::set<std::string>> edge_parents;
  for (const auto& e : spec.edges) {
    auto r = spec.role(e.child);
    if (!r)
      throw Error(Errc::DanglingReference, "edge into unknown node '" + e.child + "' in '" + tname + "'",
                  {{"template", tname}, {"edge", {e.parent, e.child}}});
    if (*r == NodeRole::Input)
      throw Error(Errc::InputHasCpt, "input node '" + e.child + "' of '" + tname + "' has an internal parent",
                  {{"template", tname}, {"node", e.child}});
    provider_var(e.parent);
    if (!edge_parents[e.child].insert(e.parent).second)
      throw Error(Errc::DuplicateName, "edge " + e.parent + " -> " + e.child + " declared twice",
                  {{"template", tname}, {"edge", {e.parent, e.child}}});
  }
  for (const auto& [local, cpt] : spec.cpts) {
    auto r = spec.role(local);
    if (!r)
      throw Error(Errc::DanglingReference, "CPT for unknown node '" + local + "' in '" + tname + "'",
                  {{"template", tname}, {"node", local}});
    if (*r == NodeRole::Input)
      throw Error(Errc::InputHasCpt, "input node '" + local + "' of '" + tname + "' carries a CPT",
                  {{"template", tname}, {"node", local}});
    std::set<std::string> listed(cpt.parents.begin(), cpt.parents.end());
    if (listed.size() != cpt.parents.size() || listed != edge_parents[local])
      throw Error(Errc::CptShapeMismatch, "CPT parents of '" + tname + "." + local + "' differ from its edges",
                  {{"template", tname}, {"node", local}, {"cpt_parents", cpt.parents}});
    std::size_t rows = 1;
    for (const auto& p : cpt.parents) rows *= provider_var(p).cardinality();
    check_table(tname + "." + local, cpt.table, rows, spec.node(local)->cardinality());
  }
  for (const auto* group : {&spec.outputs, &spec.privates})
    for (const auto& v : *group)
      if (!spec.cpts.count(v.name))
        throw Error(Errc::OutputMissingCpt, "node '" + v.name + "' of '" + tname + "' has no CPT",
                    {{"template", tname}, {"node", v.name}});

  std::set<std::string> bound;
  for (const auto& b : spec.bindings) {
    auto [inst_name, input] = split_ref(b.input);
    const InstanceSpec* inst = inst_name.empty() ? nullptr : spec.instance(inst_name);
    if (!inst)
      throw Error(Errc::DanglingReference, "binding target '" + b.input + "' is not an instance input",
                  {{"template", tname}, {"input", b.input}});
    const OobnTemplate& consumer = at(inst->template_name);
    if (consumer.role(input) != NodeRole::Input)
      throw Error(Errc::DanglingReference, "'" + b.input + "' is not an input node of '" + consumer.name + "'",
                  {{"template", tname}, {"input", b.input}});
    if (!bound.insert(b.input).second)
      throw Error(Errc::DuplicateName, "input '" + b.input + "' bound twice", {{"template", tname}, {"input", b.input}});
    const Variable& provided = provider_var(b.provider);
    const Variable& placeholder = *consumer.node(input);
    if (provided.states != placeholder.states)
      throw Error(Errc::SignatureMismatch, "binding " + b.provider + " -> " + b.input + " has mismatched states",
                  {{"template", tname},
                   {"provider", b.provider},
                   {"provider_states", provided.states},
                   {"input", b.input},
                   {"input_states", placeholder.states}});
  }

  for (const auto& [input, prior] : spec.standin_priors) {
    if (spec.role(input) != NodeRole::Input)
      throw Error(Errc::DanglingReference, "stand-in prior for non-input '" + input + "'",
                  {{"template", tname}, {"node", input}});
    check_table(tname + "." + input + " (stand-in)", {prior}, 1, spec.node(input)->cardinality());
  }

  auto [it, _] = templates_.emplace(tname, std::move(spec));
  return it->second;
}

TemplateLibrary TemplateLibrary::from_templates(std::vector<OobnTemplate> specs) {
  std::map<std::string, OobnTemplate*> by_name;
  for (auto& s : specs)
    if (!by_name.emplace(s.name, &s).second)
      throw Error(Errc::NameCollision, "template '" + s.name + "' defined twice", {{"template", s.name}});

  TemplateLibrary lib;
  std::map<std::string, int> state;  // 0 unvisited, 1 on stack, 2 done
  std::vector<std::string> stack;
  std::function<void(const std::string&)> visit = [&](const std::string& name) {
    auto it = by_name.find(name);
    if (it == by_name.end()) return;  // reported by define() as UnknownTemplateReference
    int& st = state[name];
    if (st == 2) return;
    if (st == 1) {
      json cycle = std::vector<std::string>(std::find(stack.begin(), stack.end(), name), stack.end());
      cycle.push_back(name);
      throw Error(Errc::TemplateCycle, "templates instantiate each other cyclically", {{"cycle", cycle}});
    }
    st = 1;
    stack.push_back(name);
    for (const auto& inst : it->second->instances) visit(inst.template_name);
    stack.pop_back();
    st = 2;
    lib.define(std::move(*it->second));
  };
  std::vector<std::string> names;
  for (const auto& [n, _] : by_name) names.push_back(n);
  for (const auto& n : names) visit(n);
  return lib;
}

const OobnTemplate& TemplateLibrary::at(std::string_view name) const {
  auto it = templates_.find(name);
  if (it == templates_.end())
    throw Error(Errc::UnknownTemplateReference, "no template named '" + std::string(name) + "'", {{"template", name}});
  return it->second;
}

TemplateLibrary TemplateLibrary::with_template(OobnTemplate replacement) const {
  std::vector<OobnTemplate> all;
  for (const auto& [n, t] : templates_) all.push_back(n == replacement.name ? replacement : t);
  return from_templates(std::move(all));
}

std::vector<BindingReport> check_all_bindings(const TemplateLibrary& lib) {
  std::vector<BindingReport> out;
  for (const auto& [name, t] : lib.templates()) {
    for (const auto& b : t.bindings) {
      BindingReport rep{name, b, true, ""};
      try {
        auto [cinst, input] = split_ref(b.input);
        const OobnTemplate& consumer = lib.at(t.instance(cinst)->template_name);
        auto [pinst, output] = split_ref(b.provider);
        const OobnTemplate& provider = pinst.empty() ? t : lib.at(t.instance(pinst)->template_name);
        check_binding(provider, output, consumer, input);
      } catch (const Error& e) {
        rep.ok = false;
        rep.message = e.what();
      }
      out.push_back(std::move(rep));
    }
  }
  return out;
}

namespace {

struct Frame {
  const OobnTemplate* tmpl = nullptr;
  std::string path;            // prefix for flat names
  const Frame* parent = nullptr;
  std::string instance_name;   // name inside the parent
  std::vector<std::unique_ptr<Frame>> children;

  const Frame* child(std::string_view n) const {
    for (const auto& c : children)
      if (c->instance_name == n) return c.get();
    return nullptr;
  }
};

class Flattener {
 public:
  Flattener(const TemplateLibrary& lib, bool standalone) : lib_(lib), standalone_(standalone) {}

  FlatModel run(std::string_view top) {
    Frame root;
    root.tmpl = &lib_.at(top);
    build(root, 0);
    if (standalone_) {
      for (const auto& in : root.tmpl->inputs) {
        auto it = root.tmpl->standin_priors.find(in.name);
        if (it == root.tmpl->standin_priors.end())
          throw Error(Errc::MissingStandInPrior,
                      "input '" + in.name + "' of '" + root.tmpl->name + "' has no stand-in prior",
                      {{"template", root.tmpl->name}, {"input", in.name}});
        add_variable(in, Cpt{in.name, {}, {it->second}}, NodeOrigin{"", root.tmpl->name, in.name, true});
      }
    }
    emit(root);
    FlatModel model;
    std::vector<Edge> edges;
    for (const auto& c : cpts_)
      for (const auto& p : c.parents) edges.push_back({p, c.child});
    model.network = Network::build(std::move(vars_), edges, cpts_);
    model.origins = std::move(origins_);
    return model;
  }

 private:
  void build(Frame& f, int depth) {
    if (depth > 64) throw Error(Errc::TemplateCycle, "instance nesting too deep");
    for (const auto& inst : f.tmpl->instances) {
      auto c = std::make_unique<Frame>();
      c->tmpl = &lib_.at(inst.template_name);
      c->path = f.path + inst.name + ".";
      c->parent = &f;
      c->instance_name = inst.name;
      build(*c, depth + 1);
      f.children.push_back(std::move(c));
    }
  }

  std::string resolve(const Frame& f, const std::string& local) const {
    auto role = f.tmpl->role(local);
    if (!role) throw Error(Errc::DanglingReference, "unknown node '" + f.path + local + "'");
    if (*role != NodeRole::Input) return f.path + local;
    if (!f.parent) {
      if (standalone_) return local;
      throw Error(Errc::UnboundInput, "top-level input '" + local + "' of '" + f.tmpl->name + "' is unbound",
                  {{"input", local}, {"template", f.tmpl->name}});
    }
    const std::string key = f.instance_name + "." + local;
    for (const auto& b : f.parent->tmpl->bindings)
      if (b.input == key) return resolve_ref(*f.parent, b.provider);
    throw Error(Errc::UnboundInput, "input '" + f.path + local + "' is not bound",
                {{"input", f.path + local}, {"template", f.tmpl->name}});
  }

  std::string resolve_ref(const Frame& f, const std::string& ref) const {
    auto [inst, local] = split_ref(ref);
    if (inst.empty()) return resolve(f, local);
    const Frame* c = f.child(inst);
    if (!c) throw Error(Errc::DanglingReference, "unknown instance in '" + f.path + ref + "'");
    return resolve(*c, local);
  }

  void add_variable(const Variable& v, Cpt cpt, NodeOrigin origin) {
    if (!names_.insert(cpt.child).second)
      throw Error(Errc::NameCollision, "flattened name '" + cpt.child + "' produced twice", {{"name", cpt.child}});
    vars_.push_back(Variable{cpt.child, v.states});
    cpts_.push_back(std::move(cpt));
    origins_.push_back(std::move(origin));
  }

  void emit(const Frame& f) {
    for (const auto& c : f.children) emit(*c);
    for (const auto* group : {&f.tmpl->outputs, &f.tmpl->privates})
      for (const auto& v : *group) {
        const TemplateCpt& tc = f.tmpl->cpts.at(v.name);
        Cpt cpt{f.path + v.name, {}, tc.table};
        for (const auto& p : tc.parents) cpt.parents.push_back(resolve_ref(f, p));
        add_variable(v, std::move(cpt), NodeOrigin{f.path, f.tmpl->name, v.name, false});
      }
  }

  const TemplateLibrary& lib_;
  bool standalone_;
  std::set<std::string> names_;
  std::vector<Variable> vars_;
  std::vector<Cpt> cpts_;
  std::vector<NodeOrigin> origins_;
};

}  // namespace

FlatModel flatten(const TemplateLibrary& lib, std::string_view top) { return Flattener(lib, false).run(top); }

FlatModel flatten_standalone(const TemplateLibrary& lib, std::string_view name) {
  return Flattener(lib, true).run(name);
}

std::map<std::string, Posterior> run_submodel(const TemplateLibrary& lib, std::string_view name,
                                              const Evidence& evidence) {
  return posterior_all(flatten_standalone(lib, name).network, evidence);
}

OobnTemplate template_from_json(const std::string& name, const json& j) {
  if (!j.is_object()) throw Error(Errc::SchemaError, "template '" + name + "' must be an object");
  try {
    OobnTemplate t;
    t.name = name;
    auto vars = [&](const char* key) {
      std::vector<Variable> out;
      const json vs = j.value(key, json::array());
      for (const auto& v : vs) out.push_back(variable_from_json(v));
      return out;
    };
    t.inputs = vars("inputs");
    t.outputs = vars("outputs");
    t.privates = vars("privates");
    const json edges = j.value("edges", json::array());
    for (const auto& e : edges) {
      if (!e.is_array() || e.size() != 2)
        throw Error(Errc::SchemaError, "template '" + name + "' has a malformed edge", {{"edge", e}});
      t.edges.push_back({e[0].get<std::string>(), e[1].get<std::string>()});
    }
    const json cpts = j.value("cpts", json::object());
    for (const auto& [local, c] : cpts.items()) {
      TemplateCpt tc;
      tc.parents = c.value("parents", std::vector<std::string>{});
      if (!c.contains("table"))
        throw Error(Errc::SchemaError, "CPT '" + name + "." + local + "' has no table");
      tc.table = c.at("table").get<std::vector<std::vector<double>>>();
      tc.provenance = provenance_from_string(c.value("provenance", std::string("elicited")));
      t.cpts.emplace(local, std::move(tc));
    }
    const json instances = j.value("instances", json::array());
    for (const auto& i : instances)
      t.instances.push_back({i.at("name").get<std::string>(), i.at("template").get<std::string>()});
    const json bindings = j.value("bindings", json::array());
    for (const auto& b : bindings)
      t.bindings.push_back({b.at("input").get<std::string>(), b.at("provider").get<std::string>()});
    const json priors = j.value("standin_priors", json::object());
    for (const auto& [input, p] : priors.items())
      t.standin_priors.emplace(input, p.get<std::vector<double>>());
    return t;
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaError, "malformed template '" + name + "': " + e.what(), {{"template", name}});
  }
}

json template_to_json(const OobnTemplate& t) {
  auto vars = [](const std::vector<Variable>& vs) {
    json out = json::array();
    for (const auto& v : vs) out.push_back(variable_to_json(v));
    return out;
  };
  json edges = json::array();
  for (const auto& e : t.edges) edges.push_back({e.parent, e.child});
  json cpts = json::object();
  for (const auto& [local, c] : t.cpts)
    cpts[local] = {{"parents", c.parents}, {"table", c.table}, {"provenance", std::string(to_string(c.provenance))}};
  json instances = json::array();
  for (const auto& i : t.instances) instances.push_back({{"name", i.name}, {"template", i.template_name}});
  json bindings = json::array();
  for (const auto& b : t.bindings) bindings.push_back({{"input", b.input}, {"provider", b.provider}});
  json priors = json::object();
  for (const auto& [input, p] : t.standin_priors) priors[input] = p;
  return {{"inputs", vars(t.inputs)},   {"outputs", vars(t.outputs)},   {"privates", vars(t.privates)},
          {"edges", edges},             {"cpts", cpts},                 {"instances", instances},
          {"bindings", bindings},       {"standin_priors", priors}};
}

TemplateLibrary library_from_json(const json& templates) {
  if (!templates.is_object()) throw Error(Errc::SchemaError, "'templates' must be an object keyed by template name");
  std::vector<OobnTemplate> specs;
  for (const auto& [name, spec] : templates.items()) specs.push_back(template_from_json(name, spec));
  return TemplateLibrary::from_templates(std::move(specs));
}

json library_to_json(const TemplateLibrary& lib) {
  json out = json::object();
  for (const auto& [name, t] : lib.templates()) out[name] = template_to_json(t);
  return out;
}

}  // namespace oobnlab
