#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "oobnlab/error.hpp"
#include "oobnlab/network.hpp"
#include "oobnlab/network_io.hpp"
#include "support/oracle.hpp"

using namespace oobnlab;
using testsupport::JointOracle;

namespace {

Variable binary(const std::string& name) { return {name, {"t", "f"}}; }

Network chain_abc() {
  return build_network({binary("A"), binary("B"), binary("C")}, {{"A", "B"}, {"B", "C"}},
                       {{"A", {}, {{0.3, 0.7}}},
                        {"B", {"A"}, {{0.9, 0.1}, {0.2, 0.8}}},
                        {"C", {"B"}, {{0.6, 0.4}, {0.1, 0.9}}}});
}

Network collider() {
  return build_network({binary("X"), binary("Y"), binary("Z")}, {{"X", "Z"}, {"Y", "Z"}},
                       {{"X", {}, {{0.5, 0.5}}},
                        {"Y", {}, {{0.4, 0.6}}},
                        {"Z", {"X", "Y"}, {{0.9, 0.1}, {0.5, 0.5}, {0.3, 0.7}, {0.05, 0.95}}}});
}

Errc build_error(std::vector<Variable> vars, const std::vector<Edge>& edges, const std::vector<Cpt>& cpts) {
  try {
    build_network(std::move(vars), edges, cpts);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "network was accepted";
  return Errc::InvalidArgument;
}

}  // namespace

TEST(BuildNetwork, MinimalTwoNodeNet) {
  const Network net = build_network({binary("A"), binary("B")}, {{"A", "B"}},
                                    {{"A", {}, {{0.6, 0.4}}}, {"B", {"A"}, {{0.7, 0.3}, {0.2, 0.8}}}});
  EXPECT_EQ(net.size(), 2u);
  EXPECT_EQ(net.edges().size(), 1u);
  EXPECT_DOUBLE_EQ(joint_probability(net, Assignment{{"A", "t"}, {"B", "t"}}), 0.6 * 0.7);
}

TEST(BuildNetwork, RejectsEnumeratedErrors) {
  const Cpt a{"A", {}, {{0.5, 0.5}}};
  EXPECT_EQ(build_error({binary("A"), binary("B")}, {{"A", "B"}, {"B", "A"}},
                        {{"A", {"B"}, {{0.5, 0.5}, {0.5, 0.5}}}, {"B", {"A"}, {{0.5, 0.5}, {0.5, 0.5}}}}),
            Errc::CycleDetected);
  EXPECT_EQ(build_error({binary("A")}, {}, {{"A", {}, {{0.5, 0.4}}}}), Errc::RowNotNormalized);
  EXPECT_EQ(build_error({binary("A")}, {}, {{"A", {}, {{0.5, 0.3, 0.2}}}}), Errc::CptShapeMismatch);
  EXPECT_EQ(build_error({binary("A"), binary("B")}, {{"A", "B"}}, {a, {"B", {"A"}, {{0.5, 0.5}}}}),
            Errc::CptShapeMismatch);
  EXPECT_EQ(build_error({binary("A")}, {{"A", "Q"}}, {a}), Errc::DanglingReference);
  EXPECT_EQ(build_error({binary("A"), binary("A")}, {}, {a}), Errc::DuplicateName);
  EXPECT_EQ(build_error({{"A", {"t", "t"}}}, {}, {a}), Errc::InvalidVariable);
  EXPECT_EQ(build_error({{"", {"t", "f"}}}, {}, {}), Errc::InvalidVariable);
  EXPECT_EQ(build_error({binary("A"), binary("B")}, {}, {a}), Errc::CptShapeMismatch);
  EXPECT_EQ(build_error({binary("A")}, {}, {{"A", {}, {{1.2, -0.2}}}}), Errc::RowNotNormalized);
}

TEST(BuildNetwork, RowNotNormalizedReportsSum) {
  try {
    build_network({binary("A")}, {}, {{"A", {}, {{0.5, 0.4}}}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::RowNotNormalized);
    EXPECT_NEAR(e.detail().at("sum").get<double>(), 0.9, 1e-12);
  }
}

TEST(BuildNetwork, RowsWithinToleranceAreKeptVerbatim) {
  const Network net = build_network({binary("A")}, {}, {{"A", {}, {{0.5 + 5e-10, 0.5}}}});
  EXPECT_EQ(net.row(0, 0)[0], 0.5 + 5e-10);
}

TEST(TopologicalOrder, ChainAndTieBreak) {
  EXPECT_EQ(topological_order(chain_abc()), (std::vector<std::string>{"A", "B", "C"}));
  const Network v = build_network({binary("C"), binary("B"), binary("A")}, {{"A", "C"}, {"B", "C"}},
                                  {{"A", {}, {{0.5, 0.5}}},
                                   {"B", {}, {{0.5, 0.5}}},
                                   {"C", {"A", "B"}, {{1, 0}, {1, 0}, {0, 1}, {0, 1}}}});
  EXPECT_EQ(topological_order(v), (std::vector<std::string>{"A", "B", "C"}));
}

TEST(TopologicalOrder, ParentsPrecedeChildrenOnRandomNets) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 50; ++i) {
    const Network net = testsupport::random_network(rng, {.variables = 10, .max_parents = 3});
    const auto order = topological_order(net);
    for (const auto& e : net.edges()) {
      const auto pp = std::find(order.begin(), order.end(), e.parent);
      const auto pc = std::find(order.begin(), order.end(), e.child);
      EXPECT_LT(pp, pc);
    }
  }
}

TEST(DSeparation, CanonicalStructures) {
  const Network c = collider();
  EXPECT_TRUE(d_separated(c, {"X"}, {"Y"}, {}));
  EXPECT_FALSE(d_separated(c, {"X"}, {"Y"}, {"Z"}));

  const Network chain = chain_abc();
  EXPECT_FALSE(d_separated(chain, {"A"}, {"C"}, {}));
  EXPECT_TRUE(d_separated(chain, {"A"}, {"C"}, {"B"}));

  const Network fork = build_network({binary("A"), binary("B"), binary("C")}, {{"B", "A"}, {"B", "C"}},
                                     {{"B", {}, {{0.5, 0.5}}},
                                      {"A", {"B"}, {{0.9, 0.1}, {0.2, 0.8}}},
                                      {"C", {"B"}, {{0.7, 0.3}, {0.4, 0.6}}}});
  EXPECT_FALSE(d_separated(fork, {"A"}, {"C"}, {}));
  EXPECT_TRUE(d_separated(fork, {"A"}, {"C"}, {"B"}));
}

TEST(DSeparation, ColliderOpenedByDescendant) {
  const Network net = build_network(
      {binary("X"), binary("Y"), binary("Z"), binary("W")}, {{"X", "Z"}, {"Y", "Z"}, {"Z", "W"}},
      {{"X", {}, {{0.5, 0.5}}},
       {"Y", {}, {{0.5, 0.5}}},
       {"Z", {"X", "Y"}, {{0.9, 0.1}, {0.5, 0.5}, {0.3, 0.7}, {0.05, 0.95}}},
       {"W", {"Z"}, {{0.8, 0.2}, {0.1, 0.9}}}});
  EXPECT_TRUE(d_separated(net, {"X"}, {"Y"}, {}));
  EXPECT_FALSE(d_separated(net, {"X"}, {"Y"}, {"W"}));
}

TEST(DSeparation, OverlappingSetsRejected) {
  try {
    d_separated(chain_abc(), {"A"}, {"A"}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::OverlappingSets);
  }
  EXPECT_THROW(d_separated(chain_abc(), {"A"}, {"C"}, {"C"}), Error);
}

// d-separation agrees with conditional independence computed from the joint
// on strictly positive random networks, both ways.
TEST(DSeparation, MatchesNumericalIndependence) {
  std::mt19937_64 rng(2024);
  std::size_t separated = 0, connected = 0;
  for (int n = 0; n < 50; ++n) {
    const Network net = testsupport::random_network(
        rng, {.variables = 8, .max_states = 2, .max_parents = 3, .edge_probability = 0.35, .strictly_positive = true});
    const JointOracle oracle(net);
    for (int q = 0; q < 20; ++q) {
      std::vector<std::string> names;
      for (const auto& v : net.variables()) names.push_back(v.name);
      std::shuffle(names.begin(), names.end(), rng);
      std::uniform_int_distribution<int> zsize(0, 3);
      const std::set<std::string> x{names[0]}, y{names[1]};
      std::set<std::string> z(names.begin() + 2, names.begin() + 2 + zsize(rng));
      const bool sep = d_separated(net, x, y, z);
      EXPECT_EQ(sep, d_separated(net, y, x, z));
      const double dev = oracle.independence_deviation(x, y, z);
      if (sep) {
        ++separated;
        EXPECT_LE(dev, 1e-10) << "d-separated but dependent";
      } else {
        ++connected;
        EXPECT_GT(dev, 1e-10) << "d-connected but numerically independent";
      }
    }
  }
  EXPECT_GT(separated, 50u);
  EXPECT_GT(connected, 50u);
}

TEST(MarkovBlanket, Examples) {
  const Network c = collider();
  EXPECT_EQ(markov_blanket(c, "X"), (std::set<std::string>{"Y", "Z"}));
  const Network iso = build_network({binary("A")}, {}, {{"A", {}, {{0.5, 0.5}}}});
  EXPECT_TRUE(markov_blanket(iso, "A").empty());
  EXPECT_THROW(markov_blanket(iso, "Nope"), Error);
}

TEST(MarkovBlanket, SeparatesNodeFromRest) {
  std::mt19937_64 rng(5);
  for (int n = 0; n < 40; ++n) {
    const Network net = testsupport::random_network(rng, {.variables = 9, .max_parents = 3});
    for (const auto& v : net.variables()) {
      const auto mb = markov_blanket(net, v.name);
      std::set<std::string> rest;
      for (const auto& w : net.variables())
        if (w.name != v.name && !mb.count(w.name)) rest.insert(w.name);
      if (!rest.empty()) EXPECT_TRUE(d_separated(net, {v.name}, rest, mb));
    }
  }
}

TEST(JointProbability, TotalAssignmentsSumToOne) {
  std::mt19937_64 rng(99);
  for (int n = 0; n < 30; ++n) {
    const Network net = testsupport::random_network(rng, {.variables = 7, .max_states = 3});
    const JointOracle oracle(net);
    double total = 0.0;
    for (std::size_t k = 0; k < oracle.configurations(); ++k) {
      const double p = joint_probability(net, oracle.assignment(k));
      EXPECT_NEAR(p, oracle.probability(k), 1e-15);
      total += p;
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(JointProbability, PartialAssignmentRejected) {
  try {
    joint_probability(chain_abc(), Assignment{{"A", "t"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::PartialAssignment);
  }
}

TEST(NetworkIo, RoundTripsUnchanged) {
  std::mt19937_64 rng(3);
  for (int n = 0; n < 30; ++n) {
    const Network net = testsupport::random_network(rng, {.variables = 8, .max_states = 4});
    const auto doc = network_to_json(net);
    const Network back = network_from_json(nlohmann::json::parse(doc.dump()));
    EXPECT_TRUE(back == net);
    EXPECT_EQ(network_to_json(back).dump(), doc.dump());
  }
}

TEST(Evidence, UnknownNamesAndLabels) {
  const Network net = chain_abc();
  try {
    resolve_evidence(net, {{"A", "maybe"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnknownState);
  }
  try {
    resolve_evidence(net, {{"Q", "t"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnknownVariable);
  }
}
