#include <gtest/gtest.h>

#include <random>

#include "oobnlab/bundle.hpp"
#include "oobnlab/error.hpp"
#include "oobnlab/network_io.hpp"
#include "oobnlab/oobn.hpp"
#include "support/models.hpp"
#include "support/oracle.hpp"

using namespace oobnlab;
using testsupport::max_abs_diff;
using testsupport::random_composed;
using testsupport::random_table;

namespace {

const std::vector<std::string> kLmh{"low", "medium", "high"};

Variable lmh(const std::string& name) { return {name, kLmh}; }
Variable binary(const std::string& name) { return {name, {"yes", "no"}}; }

template <class Fn>
Errc error_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::InvalidArgument;
}

OobnTemplate witness_creation() {
  OobnTemplate t;
  t.name = "WitnessCreation";
  t.inputs = {lmh("Difficulty"), lmh("StateEntriesUpdated")};
  t.privates = {{"WitnessSize", {"small", "medium", "large", "veryLarge"}}};
  t.outputs = {lmh("WitnessCreationTime")};
  t.edges = {{"Difficulty", "WitnessSize"}, {"StateEntriesUpdated", "WitnessSize"},
             {"WitnessSize", "WitnessCreationTime"}};
  std::vector<std::vector<double>> ws;
  for (int r = 0; r < 9; ++r) ws.push_back({0.4 - 0.03 * r, 0.3, 0.2, 0.1 + 0.03 * r});
  t.cpts["WitnessSize"] = {{"Difficulty", "StateEntriesUpdated"}, ws, Provenance::Learned};
  t.cpts["WitnessCreationTime"] = {
      {"WitnessSize"}, {{0.7, 0.25, 0.05}, {0.3, 0.6, 0.1}, {0.1, 0.5, 0.4}, {0.05, 0.3, 0.65}}, Provenance::Learned};
  t.standin_priors = {{"Difficulty", {0.2, 0.5, 0.3}}, {"StateEntriesUpdated", {0.3, 0.4, 0.3}}};
  return t;
}

// Same variables, parents and tables, regardless of declaration order.
void expect_same_model(const Network& a, const Network& b) {
  ASSERT_EQ(a.size(), b.size());
  for (const auto& v : a.variables()) {
    const auto other = b.find(v.name);
    ASSERT_TRUE(other.has_value()) << v.name;
    EXPECT_EQ(b.variable(*other), v);
    EXPECT_EQ(b.cpt(*other), a.cpt(a.id(v.name))) << v.name;
  }
}

}  // namespace

TEST(Template, WitnessCreationInterface) {
  TemplateLibrary lib;
  const auto& t = lib.define(witness_creation());
  EXPECT_EQ(t.role("Difficulty"), NodeRole::Input);
  EXPECT_EQ(t.role("StateEntriesUpdated"), NodeRole::Input);
  EXPECT_EQ(t.role("WitnessSize"), NodeRole::Private);
  EXPECT_EQ(t.role("WitnessCreationTime"), NodeRole::Output);
}

TEST(Template, RuleViolations) {
  auto with_input_cpt = witness_creation();
  with_input_cpt.cpts["Difficulty"] = {{}, {{0.2, 0.5, 0.3}}};
  EXPECT_EQ(error_of([&] { TemplateLibrary().define(with_input_cpt); }), Errc::InputHasCpt);

  auto missing = witness_creation();
  missing.cpts.erase("WitnessCreationTime");
  EXPECT_EQ(error_of([&] { TemplateLibrary().define(missing); }), Errc::OutputMissingCpt);

  OobnTemplate self;
  self.name = "Loop";
  self.outputs = {binary("X")};
  self.cpts["X"] = {{}, {{0.5, 0.5}}};
  self.instances = {{"inner", "Loop"}};
  EXPECT_EQ(error_of([&] { TemplateLibrary().define(self); }), Errc::TemplateCycle);

  OobnTemplate ghost = self;
  ghost.name = "Ghost";
  ghost.instances = {{"inner", "Nowhere"}};
  EXPECT_EQ(error_of([&] { TemplateLibrary().define(ghost); }), Errc::UnknownTemplateReference);

  OobnTemplate dup = self;
  dup.name = "Dup";
  dup.instances.clear();
  dup.privates = {binary("X")};
  EXPECT_EQ(error_of([&] { TemplateLibrary().define(dup); }), Errc::NameCollision);
}

TEST(Template, MutualInstantiationIsACycle) {
  OobnTemplate a;
  a.name = "A";
  a.outputs = {binary("X")};
  a.cpts["X"] = {{}, {{0.5, 0.5}}};
  OobnTemplate b = a;
  b.name = "B";
  a.instances = {{"b", "B"}};
  b.instances = {{"a", "A"}};
  EXPECT_EQ(error_of([&] { TemplateLibrary::from_templates({a, b}); }), Errc::TemplateCycle);
}

TEST(Binding, SignatureCheck) {
  OobnTemplate provider;
  provider.name = "P";
  provider.outputs = {lmh("Out"), {"Binary", {"low", "high"}}};
  OobnTemplate consumer;
  consumer.name = "C";
  consumer.inputs = {lmh("In")};
  EXPECT_NO_THROW(check_binding(provider, "Out", consumer, "In"));
  try {
    check_binding(provider, "Binary", consumer, "In");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SignatureMismatch);
    EXPECT_EQ(e.detail().at("provider_states"), nlohmann::json({"low", "high"}));
    EXPECT_EQ(e.detail().at("input_states"), nlohmann::json(kLmh));
  }
  OobnTemplate reordered = consumer;
  reordered.inputs = {{"In", {"high", "medium", "low"}}};
  EXPECT_THROW(check_binding(provider, "Out", reordered, "In"), Error);
}

TEST(Binding, ProviderMustBeAnOutput) {
  std::mt19937_64 rng(1);
  auto c = random_composed(rng);
  auto mid = c.library.at("Mid");
  mid.bindings = {{"f.In", "src.P"}};
  EXPECT_EQ(error_of([&] { c.library.with_template(mid); }), Errc::NotAnOutput);
  mid.bindings = {{"f.In", "src.Nope"}};
  EXPECT_EQ(error_of([&] { c.library.with_template(mid); }), Errc::DanglingReference);
}

TEST(Flatten, IdentityForPlainTemplate) {
  OobnTemplate t;
  t.name = "Plain";
  t.outputs = {binary("A"), binary("B")};
  t.edges = {{"A", "B"}};
  t.cpts["A"] = {{}, {{0.3, 0.7}}};
  t.cpts["B"] = {{"A"}, {{0.9, 0.1}, {0.4, 0.6}}};
  TemplateLibrary lib;
  lib.define(t);
  const FlatModel flat = flatten(lib, "Plain");
  const Network expected = build_network({binary("A"), binary("B")}, {{"A", "B"}},
                                         {{"A", {}, {{0.3, 0.7}}}, {"B", {"A"}, {{0.9, 0.1}, {0.4, 0.6}}}});
  expect_same_model(flat.network, expected);
}

TEST(Flatten, NestedPathsAndUnification) {
  std::mt19937_64 rng(2);
  const auto c = random_composed(rng);
  const FlatModel flat = flatten(c.library, "Top");
  EXPECT_EQ(flat.network.size(), 8u);
  EXPECT_TRUE(flat.network.find("mid.src.P").has_value());
  EXPECT_FALSE(flat.network.find("mid.f.In").has_value());
  EXPECT_FALSE(flat.network.find("g.In").has_value());
  const auto& o = flat.origins[flat.network.id("mid.f.Q")];
  EXPECT_EQ(o.instance_path, "mid.f.");
  EXPECT_EQ(o.template_name, "Filter");
  EXPECT_EQ(o.local_name, "Q");
}

// Inference on the flattened composition equals inference on the same model
// written out by hand, and both equal enumeration.
TEST(Flatten, MatchesHandBuiltNetwork) {
  std::mt19937_64 rng(321);
  for (int rep = 0; rep < 25; ++rep) {
    const auto c = random_composed(rng);
    const Network flat = flatten(c.library, "Top").network;
    expect_same_model(flat, c.hand_built);
    const testsupport::JointOracle oracle(c.hand_built);
    for (int q = 0; q < 4; ++q) {
      const Evidence ev = testsupport::random_evidence(rng, c.hand_built, 3);
      const auto a = posterior_all(flat, ev);
      const auto b = posterior_all(c.hand_built, ev);
      for (const auto& [name, post] : b) {
        EXPECT_LE(max_abs_diff(a.at(name).probabilities, post.probabilities), 1e-10);
        EXPECT_LE(max_abs_diff(post.probabilities, oracle.posterior(name, ev)), 1e-10);
      }
    }
  }
}

TEST(Flatten, Deterministic) {
  std::mt19937_64 rng(5);
  const auto c = random_composed(rng);
  const auto first = network_to_json(flatten(c.library, "Top").network).dump();
  for (int i = 0; i < 5; ++i) EXPECT_EQ(network_to_json(flatten(c.library, "Top").network).dump(), first);
  const auto reloaded = library_from_json(nlohmann::json::parse(library_to_json(c.library).dump()));
  EXPECT_EQ(network_to_json(flatten(reloaded, "Top").network).dump(), first);
}

TEST(Flatten, UnboundInputRejected) {
  std::mt19937_64 rng(6);
  auto c = random_composed(rng);
  auto top = c.library.at("Top");
  top.bindings.clear();
  const TemplateLibrary lib = c.library.with_template(top);
  EXPECT_EQ(error_of([&] { flatten(lib, "Top"); }), Errc::UnboundInput);
}

TEST(Flatten, PrivateLeafChangeLeavesOtherPosteriorsAlone) {
  std::mt19937_64 rng(9);
  auto c = random_composed(rng);
  // Give Source a private leaf hanging off its output.
  auto source = c.library.at("Source");
  source.privates.push_back(binary("Audit"));
  source.edges.push_back({"O", "Audit"});
  source.cpts["Audit"] = {{"O"}, random_table(rng, source.outputs[0].states.size(), 2)};
  TemplateLibrary before = c.library.with_template(source);
  source.cpts["Audit"].table = random_table(rng, source.outputs[0].states.size(), 2);
  TemplateLibrary after = before.with_template(source);

  const Network a = flatten(before, "Top").network;
  const Network b = flatten(after, "Top").network;
  // The leaf has no observed descendants, so it is barren for every query.
  ASSERT_TRUE(a.children(a.id("mid.src.Audit")).empty());
  const Evidence ev{{"H", "s0"}};
  const auto pa = posterior_all(a, ev), pb = posterior_all(b, ev);
  for (const auto& v : a.variables()) {
    if (v.name == "mid.src.Audit") continue;
    EXPECT_LE(max_abs_diff(pa.at(v.name).probabilities, pb.at(v.name).probabilities), 1e-12) << v.name;
  }
}

TEST(RunSubmodel, StandInPriorsAndConditioning) {
  TemplateLibrary lib;
  lib.define(witness_creation());
  const auto prior = run_submodel(lib, "WitnessCreation", {});
  EXPECT_NEAR(prior.at("Difficulty").at("low"), 0.2, 1e-12);

  // With both inputs observed, WitnessCreationTime follows its parents' rows only.
  const auto post = run_submodel(lib, "WitnessCreation", {{"Difficulty", "high"}, {"StateEntriesUpdated", "low"}});
  const auto& t = lib.at("WitnessCreation");
  const auto& ws = t.cpts.at("WitnessSize").table[2 * 3 + 0];
  const auto& wct = t.cpts.at("WitnessCreationTime").table;
  for (std::size_t s = 0; s < 3; ++s) {
    double expected = 0.0;
    for (std::size_t w = 0; w < 4; ++w) expected += ws[w] * wct[w][s];
    EXPECT_NEAR(post.at("WitnessCreationTime").probabilities[s], expected, 1e-12);
  }

  auto no_prior = witness_creation();
  no_prior.standin_priors.erase("Difficulty");
  TemplateLibrary lib2;
  lib2.define(no_prior);
  EXPECT_EQ(error_of([&] { run_submodel(lib2, "WitnessCreation", {}); }), Errc::MissingStandInPrior);
}

TEST(ShippedBundle, FlattensAndBindsCleanly) {
  const ModelBundle b = load_bundle(OOBNLAB_DATA_DIR "/stateless-ethereum.oobn.json");
  EXPECT_EQ(b.network().size(), 18u);
  std::size_t cross = 0;
  for (const auto& r : check_all_bindings(b.library)) {
    EXPECT_TRUE(r.ok) << r.message;
    ++cross;
  }
  EXPECT_EQ(cross, 7u);
}

// BlockCreation has no inputs and nothing flows back into it, so its
// standalone marginals equal the ones inside the composed model.
TEST(ShippedBundle, BlockCreationStandaloneMatchesComposedModel) {
  const ModelBundle b = load_bundle(OOBNLAB_DATA_DIR "/stateless-ethereum.oobn.json");
  const auto standalone = run_submodel(b.library, "BlockCreation", {});
  const auto full = posterior_all(b.network(), Evidence{});
  for (const auto& [name, post] : standalone)
    EXPECT_LE(max_abs_diff(post.probabilities, full.at("blockCreation." + name).probabilities), 1e-9) << name;
}
