#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "oobnlab/network.hpp"

namespace oobnlab {

// Nonnegative table over an ordered scope, row-major with the last variable fastest.
struct Factor {
  std::vector<VarId> scope;
  std::vector<std::size_t> cards;
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  bool contains(VarId v) const;
};

// Unnormalized sums over every joint assignment consistent with a set of fixed states.
struct JointSums {
  double total = 0.0;
  std::vector<std::vector<double>> marginals;  // [variable][state]
};

// Data-parallel inner loops. Each kernel has a plain serial reference in
// `serial` and an OpenMP version in `parallel`; the rest of the library calls
// the parallel versions, the serial ones exist for testing and benchmarking.
namespace kernels {

// Work items below this count run on one thread.
inline constexpr std::size_t kParallelThreshold = 1 << 14;

namespace serial {
Factor multiply(const Factor& a, const Factor& b);
Factor sum_out(const Factor& f, VarId var);
JointSums enumerate_joint(const Network& net, const StateVector& fixed);
std::vector<double> count_configurations(std::span<const std::size_t> cells, std::size_t columns,
                                         std::span<const double> weights, std::span<const std::size_t> selected,
                                         std::span<const std::size_t> cards);
}  // namespace serial

namespace parallel {
Factor multiply(const Factor& a, const Factor& b);
Factor sum_out(const Factor& f, VarId var);
JointSums enumerate_joint(const Network& net, const StateVector& fixed);
// Weighted counts of the joint configurations of `selected` columns over a
// row-major cell matrix. Rows are split into per-thread blocks and merged in
// block order, so results do not depend on scheduling.
std::vector<double> count_configurations(std::span<const std::size_t> cells, std::size_t columns,
                                         std::span<const double> weights, std::span<const std::size_t> selected,
                                         std::span<const std::size_t> cards);
}  // namespace parallel

}  // namespace kernels

// Layout helpers shared by the kernels and inference.
Factor reorder(const Factor& f, std::span<const VarId> scope);
std::size_t scope_size(std::span<const std::size_t> cards);

}  // namespace oobnlab
