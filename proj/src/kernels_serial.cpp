#include <algorithm>

#include "oobnlab/error.hpp"
#include "oobnlab/kernels.hpp"

namespace oobnlab {

bool Factor::contains(VarId v) const { return std::find(scope.begin(), scope.end(), v) != scope.end(); }

std::size_t scope_size(std::span<const std::size_t> cards) {
  std::size_t n = 1;
  for (auto c : cards) n *= c;
  return n;
}

namespace {

// Decodes a linear index into per-position digits (last position fastest).
void decode(std::size_t index, std::span<const std::size_t> cards, std::vector<std::size_t>& digits) {
  digits.resize(cards.size());
  for (std::size_t i = cards.size(); i-- > 0;) {
    digits[i] = index % cards[i];
    index /= cards[i];
  }
}

std::size_t position(const Factor& f, VarId v) {
  return static_cast<std::size_t>(std::find(f.scope.begin(), f.scope.end(), v) - f.scope.begin());
}

}  // namespace

Factor reorder(const Factor& f, std::span<const VarId> scope) {
  Factor out;
  out.scope.assign(scope.begin(), scope.end());
  std::vector<std::size_t> src_pos(scope.size());
  for (std::size_t i = 0; i < scope.size(); ++i) {
    src_pos[i] = position(f, scope[i]);
    if (src_pos[i] == f.scope.size()) throw Error(Errc::InvalidArgument, "reorder scope is not a permutation");
    out.cards.push_back(f.cards[src_pos[i]]);
  }
  if (scope.size() != f.scope.size()) throw Error(Errc::InvalidArgument, "reorder scope is not a permutation");
  std::vector<std::size_t> src_stride(f.scope.size());
  std::size_t s = 1;
  for (std::size_t i = f.scope.size(); i-- > 0;) {
    src_stride[i] = s;
    s *= f.cards[i];
  }
  out.values.resize(f.values.size());
  std::vector<std::size_t> digits;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    decode(i, out.cards, digits);
    std::size_t j = 0;
    for (std::size_t k = 0; k < digits.size(); ++k) j += digits[k] * src_stride[src_pos[k]];
    out.values[i] = f.values[j];
  }
  return out;
}

namespace kernels::serial {

Factor multiply(const Factor& a, const Factor& b) {
  Factor out;
  out.scope = a.scope;
  out.cards = a.cards;
  for (std::size_t i = 0; i < b.scope.size(); ++i) {
    if (!a.contains(b.scope[i])) {
      out.scope.push_back(b.scope[i]);
      out.cards.push_back(b.cards[i]);
    }
  }
  out.values.resize(scope_size(out.cards));
  std::vector<std::size_t> digits, da(a.scope.size()), db(b.scope.size());
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    decode(i, out.cards, digits);
    std::size_t ia = 0, ib = 0;
    for (std::size_t k = 0; k < a.scope.size(); ++k) ia = ia * a.cards[k] + digits[k];
    for (std::size_t k = 0; k < b.scope.size(); ++k) ib = ib * b.cards[k] + digits[position(out, b.scope[k])];
    out.values[i] = a.values[ia] * b.values[ib];
  }
  return out;
}

Factor sum_out(const Factor& f, VarId var) {
  const std::size_t pos = position(f, var);
  if (pos == f.scope.size()) return f;
  Factor out;
  for (std::size_t i = 0; i < f.scope.size(); ++i) {
    if (i == pos) continue;
    out.scope.push_back(f.scope[i]);
    out.cards.push_back(f.cards[i]);
  }
  out.values.assign(scope_size(out.cards), 0.0);
  std::vector<std::size_t> digits;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    decode(i, f.cards, digits);
    std::size_t j = 0;
    for (std::size_t k = 0; k < digits.size(); ++k)
      if (k != pos) j = j * f.cards[k] + digits[k];
    out.values[j] += f.values[i];
  }
  return out;
}

JointSums enumerate_joint(const Network& net, const StateVector& fixed) {
  const std::size_t n = net.size();
  JointSums sums;
  sums.marginals.resize(n);
  for (VarId v = 0; v < n; ++v) sums.marginals[v].assign(net.cardinality(v), 0.0);

  std::vector<VarId> free_vars;
  std::vector<std::size_t> free_cards;
  for (VarId v = 0; v < n; ++v)
    if (fixed[v] == kUnobserved) {
      free_vars.push_back(v);
      free_cards.push_back(net.cardinality(v));
    }
  const std::size_t total = scope_size(free_cards);
  StateVector states = fixed;
  std::vector<std::size_t> digits;
  for (std::size_t i = 0; i < total; ++i) {
    decode(i, free_cards, digits);
    for (std::size_t k = 0; k < free_vars.size(); ++k) states[free_vars[k]] = digits[k];
    const double p = joint_probability(net, states);
    sums.total += p;
    for (VarId v = 0; v < n; ++v) sums.marginals[v][states[v]] += p;
  }
  return sums;
}

std::vector<double> count_configurations(std::span<const std::size_t> cells, std::size_t columns,
                                         std::span<const double> weights, std::span<const std::size_t> selected,
                                         std::span<const std::size_t> cards) {
  std::vector<double> counts(scope_size(cards), 0.0);
  const std::size_t rows = columns == 0 ? 0 : cells.size() / columns;
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < selected.size(); ++k) idx = idx * cards[k] + cells[r * columns + selected[k]];
    counts[idx] += weights.empty() ? 1.0 : weights[r];
  }
  return counts;
}

}  // namespace kernels::serial

}  // namespace oobnlab
