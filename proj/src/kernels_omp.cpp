#include <omp.h>

#include <algorithm>

#include "oobnlab/kernels.hpp"

namespace oobnlab::kernels::parallel {

namespace {

// Half-open slice [begin, end) of n items owned by thread t of nt.
std::pair<std::size_t, std::size_t> block(std::size_t n, int t, int nt) {
  const auto tt = static_cast<std::size_t>(t), nn = static_cast<std::size_t>(nt);
  return {n * tt / nn, n * (tt + 1) / nn};
}

}  // namespace

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
  const std::size_t d = out.scope.size();
  // Strides of each output position inside a and b (zero when absent).
  std::vector<std::size_t> sa(d, 0), sb(d, 0);
  {
    std::size_t s = 1;
    for (std::size_t k = a.scope.size(); k-- > 0;) {
      sa[k] = s;
      s *= a.cards[k];
    }
    s = 1;
    for (std::size_t k = b.scope.size(); k-- > 0;) {
      auto pos = static_cast<std::size_t>(std::find(out.scope.begin(), out.scope.end(), b.scope[k]) - out.scope.begin());
      sb[pos] = s;
      s *= b.cards[k];
    }
  }
  const std::size_t n = scope_size(out.cards);
  out.values.resize(n);
  double* dst = out.values.data();
  const double* va = a.values.data();
  const double* vb = b.values.data();
  const auto& cards = out.cards;

#pragma omp parallel if (n >= kParallelThreshold)
  {
    auto [begin, end] = block(n, omp_get_thread_num(), omp_get_num_threads());
    if (begin < end) {
      std::vector<std::size_t> digit(d);
      std::size_t rem = begin, ia = 0, ib = 0;
      for (std::size_t k = d; k-- > 0;) {
        digit[k] = rem % cards[k];
        rem /= cards[k];
        ia += digit[k] * sa[k];
        ib += digit[k] * sb[k];
      }
      for (std::size_t i = begin; i < end; ++i) {
        dst[i] = va[ia] * vb[ib];
        for (std::size_t k = d; k-- > 0;) {
          if (++digit[k] < cards[k]) {
            ia += sa[k];
            ib += sb[k];
            break;
          }
          ia -= (cards[k] - 1) * sa[k];
          ib -= (cards[k] - 1) * sb[k];
          digit[k] = 0;
        }
      }
    }
  }
  return out;
}

Factor sum_out(const Factor& f, VarId var) {
  const auto pos = static_cast<std::size_t>(std::find(f.scope.begin(), f.scope.end(), var) - f.scope.begin());
  if (pos == f.scope.size()) return f;
  Factor out;
  for (std::size_t i = 0; i < f.scope.size(); ++i) {
    if (i == pos) continue;
    out.scope.push_back(f.scope[i]);
    out.cards.push_back(f.cards[i]);
  }
  // Input index = outer * (k * inner) + s * inner + j_inner.
  std::size_t inner = 1;
  for (std::size_t i = pos + 1; i < f.scope.size(); ++i) inner *= f.cards[i];
  const std::size_t k = f.cards[pos];
  const std::size_t n = scope_size(out.cards);
  out.values.assign(n, 0.0);
  const double* src = f.values.data();
  double* dst = out.values.data();

#pragma omp parallel for schedule(static) if (n >= kParallelThreshold)
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t outer = j / inner, in = j % inner;
    const double* base = src + outer * k * inner + in;
    double acc = 0.0;
    for (std::size_t s = 0; s < k; ++s) acc += base[s * inner];
    dst[j] = acc;
  }
  return out;
}

JointSums enumerate_joint(const Network& net, const StateVector& fixed) {
  const std::size_t n = net.size();
  std::vector<VarId> free_vars;
  std::vector<std::size_t> free_cards;
  for (VarId v = 0; v < n; ++v)
    if (fixed[v] == kUnobserved) {
      free_vars.push_back(v);
      free_cards.push_back(net.cardinality(v));
    }
  const std::size_t total = scope_size(free_cards);

  // Pre-resolve per-variable row strides over the full state vector.
  std::vector<std::vector<std::pair<VarId, std::size_t>>> row_terms(n);
  for (VarId v = 0; v < n; ++v) {
    std::size_t stride = 1;
    const auto& ps = net.parents(v);
    for (std::size_t i = ps.size(); i-- > 0;) {
      row_terms[v].emplace_back(ps[i], stride);
      stride *= net.cardinality(ps[i]);
    }
  }

  int threads = 1;
#pragma omp parallel if (total >= kParallelThreshold)
  {
#pragma omp single
    threads = omp_get_num_threads();
  }
  std::vector<JointSums> partial(static_cast<std::size_t>(threads));

#pragma omp parallel num_threads(threads) if (total >= kParallelThreshold)
  {
    const int t = omp_get_thread_num();
    JointSums& acc = partial[static_cast<std::size_t>(t)];
    acc.marginals.resize(n);
    for (VarId v = 0; v < n; ++v) acc.marginals[v].assign(net.cardinality(v), 0.0);
    auto [begin, end] = block(total, t, omp_get_num_threads());
    StateVector states = fixed;
    std::size_t rem = begin;
    for (std::size_t k = free_vars.size(); k-- > 0;) {
      states[free_vars[k]] = rem % free_cards[k];
      rem /= free_cards[k];
    }
    for (std::size_t i = begin; i < end; ++i) {
      double p = 1.0;
      for (VarId v = 0; v < n && p != 0.0; ++v) {
        std::size_t r = 0;
        for (auto [pa, stride] : row_terms[v]) r += states[pa] * stride;
        p *= net.entry(v, r, states[v]);
      }
      acc.total += p;
      for (VarId v = 0; v < n; ++v) acc.marginals[v][states[v]] += p;
      for (std::size_t k = free_vars.size(); k-- > 0;) {
        if (++states[free_vars[k]] < free_cards[k]) break;
        states[free_vars[k]] = 0;
      }
    }
  }

  JointSums sums;
  sums.marginals.resize(n);
  for (VarId v = 0; v < n; ++v) sums.marginals[v].assign(net.cardinality(v), 0.0);
  for (const auto& part : partial) {
    if (part.marginals.empty()) continue;
    sums.total += part.total;
    for (VarId v = 0; v < n; ++v)
      for (std::size_t s = 0; s < net.cardinality(v); ++s) sums.marginals[v][s] += part.marginals[v][s];
  }
  return sums;
}

std::vector<double> count_configurations(std::span<const std::size_t> cells, std::size_t columns,
                                         std::span<const double> weights, std::span<const std::size_t> selected,
                                         std::span<const std::size_t> cards) {
  const std::size_t configs = scope_size(cards);
  const std::size_t rows = columns == 0 ? 0 : cells.size() / columns;
  int threads = 1;
#pragma omp parallel if (rows >= kParallelThreshold)
  {
#pragma omp single
    threads = omp_get_num_threads();
  }
  std::vector<std::vector<double>> partial(static_cast<std::size_t>(threads), std::vector<double>(configs, 0.0));

#pragma omp parallel num_threads(threads) if (rows >= kParallelThreshold)
  {
    const int t = omp_get_thread_num();
    auto [begin, end] = block(rows, t, omp_get_num_threads());
    auto& counts = partial[static_cast<std::size_t>(t)];
    for (std::size_t r = begin; r < end; ++r) {
      const std::size_t* row = cells.data() + r * columns;
      std::size_t idx = 0;
      for (std::size_t k = 0; k < selected.size(); ++k) idx = idx * cards[k] + row[selected[k]];
      counts[idx] += weights.empty() ? 1.0 : weights[r];
    }
  }

  std::vector<double> counts(configs, 0.0);
  for (const auto& part : partial)
    for (std::size_t i = 0; i < configs; ++i) counts[i] += part[i];
  return counts;
}

}  // namespace oobnlab::kernels::parallel
