#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>

#include "oobnlab/bundle.hpp"
#include "oobnlab/error.hpp"
#include "oobnlab/inference.hpp"
#include "support/oracle.hpp"

using namespace oobnlab;
using testsupport::JointOracle;
using testsupport::max_abs_diff;

namespace {

Variable binary(const std::string& name) { return {name, {"t", "f"}}; }

Network chain_abc() {
  return build_network({binary("A"), binary("B"), binary("C")}, {{"A", "B"}, {"B", "C"}},
                       {{"A", {}, {{0.3, 0.7}}},
                        {"B", {"A"}, {{0.9, 0.1}, {0.2, 0.8}}},
                        {"C", {"B"}, {{0.6, 0.4}, {0.1, 0.9}}}});
}

}  // namespace

TEST(Inference, ChainByHand) {
  const Network net = chain_abc();
  // P(B=t) = 0.3*0.9 + 0.7*0.2 = 0.41; P(C=t) = 0.41*0.6 + 0.59*0.1 = 0.305
  EXPECT_NEAR(marginal(net, "C", {}).at("t"), 0.305, 1e-15);
  // P(A=t | C=t) = 0.3 * (0.9*0.6 + 0.1*0.1) / 0.305
  EXPECT_NEAR(marginal(net, "A", {{"C", "t"}}).at("t"), 0.3 * 0.55 / 0.305, 1e-15);
  EXPECT_NEAR(probability_of_evidence(net, Evidence{{"C", "t"}}), 0.305, 1e-15);
  EXPECT_EQ(probability_of_evidence(net, Evidence{}), 1.0);
}

TEST(Inference, ObservedTargetIsPointMass) {
  const auto post = marginal(chain_abc(), "B", {{"B", "f"}, {"C", "t"}});
  EXPECT_EQ(post.probabilities, (std::vector<double>{0.0, 1.0}));
}

TEST(Inference, ZeroProbabilityEvidenceRaises) {
  const Network net = build_network({binary("A"), binary("B")}, {{"A", "B"}},
                                    {{"A", {}, {{1.0, 0.0}}}, {"B", {"A"}, {{1.0, 0.0}, {0.5, 0.5}}}});
  EXPECT_EQ(probability_of_evidence(net, Evidence{{"B", "f"}}), 0.0);
  try {
    marginal(net, "A", {{"B", "f"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ZeroProbabilityEvidence);
  }
  EXPECT_THROW(posterior_all(net, Evidence{{"B", "f"}}), Error);
}

// Elimination against full enumeration on seeded random networks.
TEST(Inference, MatchesEnumerationOracle) {
  std::mt19937_64 rng(20240601);
  const auto start = std::chrono::steady_clock::now();
  std::size_t cases = 0, skipped_impossible = 0;
  for (int n = 0; n < 220; ++n) {
    std::uniform_int_distribution<std::size_t> size(2, 12);
    testsupport::RandomNetOptions o;
    o.variables = size(rng);
    o.max_states = o.variables > 9 ? 3 : 4;
    o.max_parents = 3;
    o.deterministic_rows = 0.1;
    const Network net = testsupport::random_network(rng, o);
    const JointOracle oracle(net);
    const Evidence ev = testsupport::random_evidence(rng, net, 4);
    const double pe = oracle.evidence_probability(ev);
    EXPECT_NEAR(probability_of_evidence(net, ev), pe, 1e-10);
    if (pe <= 0.0) {
      ++skipped_impossible;
      EXPECT_THROW(posterior_all(net, ev), Error);
      continue;
    }
    const auto all = posterior_all(net, ev);
    for (const auto& v : net.variables()) {
      const auto truth = oracle.posterior(v.name, ev);
      EXPECT_LE(max_abs_diff(marginal(net, v.name, ev).probabilities, truth), 1e-10) << v.name;
      EXPECT_LE(max_abs_diff(all.at(v.name).probabilities, truth), 1e-10) << v.name;
      const double sum = std::accumulate(truth.begin(), truth.end(), 0.0);
      EXPECT_NEAR(std::accumulate(all.at(v.name).probabilities.begin(), all.at(v.name).probabilities.end(), 0.0),
                  sum, 1e-9);
    }
    ++cases;
  }
  EXPECT_GE(cases + skipped_impossible, 200u);
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 60.0);
}

TEST(Inference, BruteForceReferenceAgreesWithOracle) {
  std::mt19937_64 rng(8);
  for (int n = 0; n < 30; ++n) {
    const Network net = testsupport::random_network(rng, {.variables = 8, .max_states = 3, .strictly_positive = true});
    const JointOracle oracle(net);
    const Evidence ev = testsupport::random_evidence(rng, net, 3);
    EXPECT_NEAR(brute_force_probability_of_evidence(net, ev), oracle.evidence_probability(ev), 1e-12);
    for (const auto& v : net.variables())
      EXPECT_LE(max_abs_diff(brute_force_marginal(net, v.name, ev).probabilities, oracle.posterior(v.name, ev)),
                1e-12);
  }
}

TEST(Inference, BruteForceRefusesLargeNetworks) {
  std::vector<Variable> vars;
  std::vector<Cpt> cpts;
  for (int i = 0; i < 25; ++i) {
    vars.push_back(binary("N" + std::to_string(i)));
    cpts.push_back({vars.back().name, {}, {{0.5, 0.5}}});
  }
  const Network net = build_network(vars, {}, cpts);
  try {
    brute_force_marginal(net, "N0", {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TooLargeForEnumeration);
  }
  EXPECT_NEAR(marginal(net, "N0", {}).at("t"), 0.5, 1e-15);
}

// P(e1 and e2) = P(e1) * P(e2 | e1), with the conditional read off the
// posterior joint of e2's variables given e1.
TEST(Inference, ChainRuleOfEvidence) {
  std::mt19937_64 rng(41);
  for (int n = 0; n < 60; ++n) {
    const Network net = testsupport::random_network(rng, {.variables = 9, .max_states = 3, .strictly_positive = true});
    Evidence e1 = testsupport::random_evidence(rng, net, 3);
    std::vector<std::string> free;
    for (const auto& v : net.variables())
      if (!e1.count(v.name)) free.push_back(v.name);
    if (free.empty()) continue;
    const std::string& name = free[rng() % free.size()];
    const auto& var = net.variable(net.id(name));
    const std::string label = var.states[rng() % var.states.size()];
    Evidence both = e1;
    both[name] = label;
    const double conditional = marginal(net, name, e1).at(label);
    EXPECT_NEAR(probability_of_evidence(net, both), probability_of_evidence(net, e1) * conditional, 1e-9);
  }
}

TEST(Inference, ZeroSupportPreserved) {
  std::mt19937_64 rng(77);
  std::size_t zeros = 0;
  for (int n = 0; n < 80; ++n) {
    testsupport::RandomNetOptions o;
    o.variables = 8;
    o.deterministic_rows = 0.3;
    const Network net = testsupport::random_network(rng, o);
    const JointOracle oracle(net);
    const Evidence ev = testsupport::random_evidence(rng, net, 2);
    if (oracle.evidence_probability(ev) <= 0.0) continue;
    const auto all = posterior_all(net, ev);
    for (const auto& v : net.variables()) {
      const auto truth = oracle.posterior(v.name, ev);
      for (std::size_t s = 0; s < truth.size(); ++s)
        if (truth[s] == 0.0) {
          ++zeros;
          EXPECT_EQ(all.at(v.name).probabilities[s], 0.0);
        }
    }
  }
  EXPECT_GT(zeros, 0u);
}

TEST(Inference, ResultsIndependentOfEliminationOrder) {
  std::mt19937_64 rng(13);
  for (int n = 0; n < 40; ++n) {
    const Network net = testsupport::random_network(rng, {.variables = 10, .max_states = 3, .strictly_positive = true});
    const Evidence ev = testsupport::random_evidence(rng, net, 3);
    const StateVector sv = resolve_evidence(net, ev);
    std::vector<VarId> forward(net.size()), backward(net.size());
    std::iota(forward.begin(), forward.end(), 0);
    std::iota(backward.rbegin(), backward.rend(), 0);
    const auto a = posterior_all(net, sv, &forward);
    const auto b = posterior_all(net, sv, &backward);
    const auto c = posterior_all(net, sv);
    for (std::size_t v = 0; v < net.size(); ++v) {
      EXPECT_LE(max_abs_diff(a[v].probabilities, b[v].probabilities), 1e-10);
      EXPECT_LE(max_abs_diff(a[v].probabilities, c[v].probabilities), 1e-10);
    }
  }
}

TEST(EliminationOrder, ChainEliminatesAThenB) {
  EXPECT_EQ(elimination_order(chain_abc(), {"C"}, {}), (std::vector<std::string>{"A", "B"}));
}

TEST(EliminationOrder, BarrenNodesPruned) {
  // Nothing below A matters for A's own marginal.
  EXPECT_TRUE(elimination_order(chain_abc(), {"A"}, {}).empty());
}

TEST(EliminationOrder, TreeHasInducedWidthOne) {
  // Binary tree rooted at R: R -> L, R -> M; L -> L1, L -> L2; M -> M1, M -> M2.
  std::vector<Variable> vars;
  for (const char* n : {"R", "L", "M", "L1", "L2", "M1", "M2"}) vars.push_back(binary(n));
  const std::vector<Edge> edges{{"R", "L"}, {"R", "M"}, {"L", "L1"}, {"L", "L2"}, {"M", "M1"}, {"M", "M2"}};
  std::vector<Cpt> cpts{{"R", {}, {{0.4, 0.6}}}};
  for (const auto& e : edges) cpts.push_back({e.child, {e.parent}, {{0.7, 0.3}, {0.2, 0.8}}});
  const Network net = build_network(vars, edges, cpts);
  StateVector ev(net.size(), kUnobserved);
  ev[net.id("M2")] = 1;
  for (VarId v = 0; v < net.size(); ++v) {
    EliminationStats stats;
    const VarId target[] = {v};
    evidence_joint(net, target, ev, nullptr, &stats);
    EXPECT_LE(stats.max_factor_scope, 2u) << net.name(v);
  }
}

TEST(Inference, ShippedBundleFactorsStaySmall) {
  const ModelBundle bundle = load_bundle(OOBNLAB_DATA_DIR "/stateless-ethereum.oobn.json");
  const Network& net = bundle.network();
  for (const auto& preset : {"base", "no-witness", "large-witness", "severe-witness"}) {
    const StateVector ev = resolve_evidence(net, bundle.scenario_evidence(preset));
    for (VarId v = 0; v < net.size(); ++v) {
      EliminationStats stats;
      const VarId target[] = {v};
      evidence_joint(net, target, ev, nullptr, &stats);
      EXPECT_LE(stats.max_factor_scope, 5u) << preset << " " << net.name(v);
    }
  }
}
