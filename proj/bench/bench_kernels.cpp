// Serial reference kernels against their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include <random>

#include "oobnlab/kernels.hpp"
#include "support/oracle.hpp"

using namespace oobnlab;

namespace {

Factor random_factor(std::mt19937_64& rng, std::vector<VarId> scope, std::size_t card) {
  Factor f{std::move(scope), {}, {}};
  f.cards.assign(f.scope.size(), card);
  f.values.resize(scope_size(f.cards));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& x : f.values) x = u(rng);
  return f;
}

// Operands share two variables; the product has range(0) variables of 4 states.
template <Factor (*Multiply)(const Factor&, const Factor&)>
void BM_Multiply(benchmark::State& state) {
  const auto n = static_cast<VarId>(state.range(0));
  std::mt19937_64 rng(1);
  std::vector<VarId> left, right;
  for (VarId v = 0; v < n; ++v) (v < n / 2 + 1 ? left : right).push_back(v);
  right.insert(right.begin(), {left[left.size() - 2], left.back()});
  const Factor a = random_factor(rng, left, 4), b = random_factor(rng, right, 4);
  for (auto _ : state) benchmark::DoNotOptimize(Multiply(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(scope_size(std::vector<std::size_t>(n, 4))));
}

template <Factor (*SumOut)(const Factor&, VarId)>
void BM_SumOut(benchmark::State& state) {
  const auto n = static_cast<VarId>(state.range(0));
  std::mt19937_64 rng(2);
  std::vector<VarId> scope(n);
  for (VarId v = 0; v < n; ++v) scope[v] = v;
  const Factor f = random_factor(rng, scope, 4);
  for (auto _ : state) benchmark::DoNotOptimize(SumOut(f, n / 2));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.size()));
}

template <JointSums (*Enumerate)(const Network&, const StateVector&)>
void BM_EnumerateJoint(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const Network net = testsupport::random_network(
      rng, {.variables = static_cast<std::size_t>(state.range(0)), .max_states = 2, .strictly_positive = true});
  StateVector fixed(net.size(), kUnobserved);
  fixed[0] = 1;
  for (auto _ : state) benchmark::DoNotOptimize(Enumerate(net, fixed));
  state.SetItemsProcessed(state.iterations() * (std::int64_t{1} << state.range(0)));
}

using CountFn = std::vector<double> (*)(std::span<const std::size_t>, std::size_t, std::span<const double>,
                                        std::span<const std::size_t>, std::span<const std::size_t>);

template <CountFn Count>
void BM_CountConfigurations(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::size_t cols = 8;
  std::mt19937_64 rng(4);
  std::vector<std::size_t> cells(rows * cols);
  for (auto& c : cells) c = rng() % 3;
  const std::vector<double> weights(rows, 1.0);
  const std::vector<std::size_t> selected{0, 3, 5, 7}, cards{3, 3, 3, 3};
  for (auto _ : state) benchmark::DoNotOptimize(Count(cells, cols, weights, selected, cards));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}

}  // namespace

BENCHMARK(BM_Multiply<kernels::serial::multiply>)->Name("multiply/serial")->DenseRange(8, 12, 2)->UseRealTime();
BENCHMARK(BM_Multiply<kernels::parallel::multiply>)->Name("multiply/parallel")->DenseRange(8, 12, 2)->UseRealTime();
BENCHMARK(BM_SumOut<kernels::serial::sum_out>)->Name("sum_out/serial")->DenseRange(8, 12, 2)->UseRealTime();
BENCHMARK(BM_SumOut<kernels::parallel::sum_out>)->Name("sum_out/parallel")->DenseRange(8, 12, 2)->UseRealTime();
BENCHMARK(BM_EnumerateJoint<kernels::serial::enumerate_joint>)
    ->Name("enumerate_joint/serial")
    ->DenseRange(14, 20, 3)
    ->UseRealTime();
BENCHMARK(BM_EnumerateJoint<kernels::parallel::enumerate_joint>)
    ->Name("enumerate_joint/parallel")
    ->DenseRange(14, 20, 3)
    ->UseRealTime();
BENCHMARK(BM_CountConfigurations<kernels::serial::count_configurations>)
    ->Name("count_configurations/serial")
    ->Arg(100000)
    ->Arg(1000000)
    ->UseRealTime();
BENCHMARK(BM_CountConfigurations<kernels::parallel::count_configurations>)
    ->Name("count_configurations/parallel")
    ->Arg(100000)
    ->Arg(1000000)
    ->UseRealTime();

BENCHMARK_MAIN();
