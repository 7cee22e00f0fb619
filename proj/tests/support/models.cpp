#include "models.hpp"

#include <algorithm>

namespace testsupport {

using namespace oobnlab;

std::vector<std::vector<double>> random_table(std::mt19937_64& rng, std::size_t rows, std::size_t k) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<std::vector<double>> t(rows, std::vector<double>(k));
  for (auto& row : t) {
    double s = 0.0;
    for (auto& x : row) s += (x = u(rng));
    for (auto& x : row) x /= s;
  }
  return t;
}

Composed random_composed(std::mt19937_64& rng) {
  const std::size_t ko = 2 + rng() % 2, kp = 2 + rng() % 2, kq = 2 + rng() % 3;
  auto states = [](std::size_t k) {
    std::vector<std::string> s;
    for (std::size_t i = 0; i < k; ++i) s.push_back("s" + std::to_string(i));
    return s;
  };
  const auto so = states(ko), sp = states(kp), sq = states(kq), sh = states(2);

  OobnTemplate source;
  source.name = "Source";
  source.privates = {{"P", sp}};
  source.outputs = {{"O", so}};
  source.edges = {{"P", "O"}};
  source.cpts["P"] = {{}, random_table(rng, 1, kp)};
  source.cpts["O"] = {{"P"}, random_table(rng, kp, ko)};

  OobnTemplate filter;
  filter.name = "Filter";
  filter.inputs = {{"In", so}};
  filter.privates = {{"Q", sq}};
  filter.outputs = {{"Out", so}};
  filter.edges = {{"In", "Q"}, {"Q", "Out"}, {"In", "Out"}};
  filter.cpts["Q"] = {{"In"}, random_table(rng, ko, kq)};
  filter.cpts["Out"] = {{"Q", "In"}, random_table(rng, kq * ko, ko)};

  OobnTemplate mid;
  mid.name = "Mid";
  mid.outputs = {{"M", so}};
  mid.instances = {{"src", "Source"}, {"f", "Filter"}};
  mid.bindings = {{"f.In", "src.O"}};
  mid.edges = {{"f.Out", "M"}};
  mid.cpts["M"] = {{"f.Out"}, random_table(rng, ko, ko)};

  OobnTemplate top;
  top.name = "Top";
  top.outputs = {{"H", sh}};
  top.instances = {{"mid", "Mid"}, {"g", "Filter"}};
  top.bindings = {{"g.In", "mid.M"}};
  top.edges = {{"mid.M", "H"}, {"g.Out", "H"}};
  top.cpts["H"] = {{"mid.M", "g.Out"}, random_table(rng, ko * ko, 2)};

  Composed c{TemplateLibrary::from_templates({top, mid, filter, source}), {}};

  const auto& fq = filter.cpts["Q"].table;
  const auto& fo = filter.cpts["Out"].table;
  c.hand_built = build_network(
      {{"mid.src.P", sp}, {"mid.src.O", so}, {"mid.f.Q", sq}, {"mid.f.Out", so}, {"mid.M", so}, {"g.Q", sq},
       {"g.Out", so}, {"H", sh}},
      {{"mid.src.P", "mid.src.O"}, {"mid.src.O", "mid.f.Q"}, {"mid.f.Q", "mid.f.Out"}, {"mid.src.O", "mid.f.Out"},
       {"mid.f.Out", "mid.M"}, {"mid.M", "g.Q"}, {"g.Q", "g.Out"}, {"mid.M", "g.Out"}, {"mid.M", "H"},
       {"g.Out", "H"}},
      {{"mid.src.P", {}, source.cpts["P"].table},
       {"mid.src.O", {"mid.src.P"}, source.cpts["O"].table},
       {"mid.f.Q", {"mid.src.O"}, fq},
       {"mid.f.Out", {"mid.f.Q", "mid.src.O"}, fo},
       {"mid.M", {"mid.f.Out"}, mid.cpts["M"].table},
       {"g.Q", {"mid.M"}, fq},
       {"g.Out", {"g.Q", "mid.M"}, fo},
       {"H", {"mid.M", "g.Out"}, top.cpts["H"].table}});
  return c;
}

Network five_node() {
  const std::vector<std::string> lmh{"low", "medium", "high"}, tf{"t", "f"};
  return build_network({{"A", lmh}, {"B", tf}, {"C", lmh}, {"D", tf}, {"E", tf}},
                       {{"A", "B"}, {"A", "C"}, {"B", "D"}, {"C", "D"}, {"D", "E"}},
                       {{"A", {}, {{0.5, 0.3, 0.2}}},
                        {"B", {"A"}, {{0.8, 0.2}, {0.5, 0.5}, {0.1, 0.9}}},
                        {"C", {"A"}, {{0.6, 0.3, 0.1}, {0.2, 0.6, 0.2}, {0.1, 0.3, 0.6}}},
                        {"D",
                         {"B", "C"},
                         {{0.9, 0.1}, {0.7, 0.3}, {0.4, 0.6}, {0.6, 0.4}, {0.3, 0.7}, {0.1, 0.9}}},
                        {"E", {"D"}, {{0.75, 0.25}, {0.2, 0.8}}}});
}

Network set_parameter(const Network& net, const ParameterRef& ref, double t) {
  const VarId v = net.id(ref.variable);
  const std::size_t k = net.cardinality(v);
  const std::size_t s = net.state_index(v, ref.state);
  std::vector<double> flat(net.table(v).begin(), net.table(v).end());
  double* row = flat.data() + ref.row * k;
  double rest = 0.0;
  for (std::size_t i = 0; i < k; ++i)
    if (i != s) rest += row[i];
  for (std::size_t i = 0; i < k; ++i) row[i] = i == s ? t : std::min(1.0, row[i] * (1.0 - t) / rest);
  return net.with_table(v, std::move(flat));
}

}  // namespace testsupport
