#include "oobnlab/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oobnlab/error.hpp"

namespace oobnlab {

using nlohmann::json;

void validate_bins(const BinSpec& bins) {
  if (bins.states.empty() || bins.boundaries.size() != bins.states.size() + 1)
    throw Error(Errc::NonMonotoneBins, "need exactly one more boundary than states",
                {{"states", bins.states.size()}, {"boundaries", bins.boundaries.size()}});
  for (std::size_t i = 0; i + 1 < bins.boundaries.size(); ++i)
    if (!(bins.boundaries[i] < bins.boundaries[i + 1]) || std::isnan(bins.boundaries[i]))
      throw Error(Errc::NonMonotoneBins, "bin boundaries must strictly increase", {{"index", i + 1}});
  if (!bins.midpoints.empty()) {
    if (bins.midpoints.size() != bins.states.size())
      throw Error(Errc::NonMonotoneBins, "one midpoint per bin required");
    for (std::size_t i = 0; i < bins.states.size(); ++i)
      if (bin_index(bins, bins.midpoints[i]) != static_cast<long>(i))
        throw Error(Errc::NonMonotoneBins, "midpoint of bin '" + bins.states[i] + "' lies outside it",
                    {{"state", bins.states[i]}, {"midpoint", bins.midpoints[i]}});
  }
}

long bin_index(const BinSpec& bins, double x) {
  if (std::isnan(x) || bins.boundaries.empty() || x < bins.boundaries.front() || !(x < bins.boundaries.back()))
    return -1;
  auto it = std::upper_bound(bins.boundaries.begin(), bins.boundaries.end(), x);
  return static_cast<long>(it - bins.boundaries.begin()) - 1;
}

Discretized discretize(std::span<const double> values, const BinSpec& bins) {
  validate_bins(bins);
  Discretized out;
  out.bins = bins;
  out.states.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const long b = bin_index(bins, values[i]);
    if (b < 0)
      throw Error(Errc::InvalidArgument, "value outside the bin cover", {{"index", i}, {"value", values[i]}});
    out.states.push_back(static_cast<std::size_t>(b));
  }
  return out;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(Errc::InvalidArgument, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Discretized discretize_quantiles(std::span<const double> values, std::vector<std::string> states, std::string unit) {
  if (values.empty()) throw Error(Errc::InvalidArgument, "cannot derive quantile bins from an empty column");
  if (states.size() < 2) throw Error(Errc::NonMonotoneBins, "quantile bins need at least two states");
  const std::vector<double> sample(values.begin(), values.end());
  BinSpec bins{std::move(states), {}, std::move(unit), {}};
  const std::size_t k = bins.states.size();
  bins.boundaries.push_back(*std::min_element(sample.begin(), sample.end()));
  std::vector<std::string> warnings;
  for (std::size_t i = 1; i < k; ++i) {
    double q = quantile(sample, static_cast<double>(i) / static_cast<double>(k));
    if (!(q > bins.boundaries.back())) {
      q = std::nextafter(bins.boundaries.back(), std::numeric_limits<double>::infinity());
      warnings.push_back("quantile boundary " + std::to_string(i) + " coincides with the previous one; bin '" +
                         bins.states[i - 1] + "' collapsed");
    }
    bins.boundaries.push_back(q);
  }
  bins.boundaries.push_back(std::numeric_limits<double>::infinity());
  Discretized out = discretize(values, bins);
  out.warnings = std::move(warnings);
  return out;
}

std::vector<std::vector<double>> deterministic_sum_cpt(const BinSpec& a, const BinSpec& b, const BinSpec& child) {
  validate_bins(a);
  validate_bins(b);
  validate_bins(child);
  if (a.unit != b.unit || a.unit != child.unit)
    throw Error(Errc::UnitMismatch, "sum node operands must share one unit",
                {{"units", {a.unit, b.unit, child.unit}}});
  if (a.midpoints.empty() || b.midpoints.empty())
    throw Error(Errc::InvalidArgument, "sum node parents need bin midpoints");
  std::vector<std::vector<double>> table;
  for (std::size_t i = 0; i < a.states.size(); ++i)
    for (std::size_t j = 0; j < b.states.size(); ++j) {
      const double sum = a.midpoints[i] + b.midpoints[j];
      const long c = bin_index(child, sum);
      if (c < 0)
        throw Error(Errc::SumOutOfRange, "sum of midpoints falls outside the child bins",
                    {{"a", a.states[i]}, {"b", b.states[j]}, {"sum", sum}});
      std::vector<double> row(child.states.size(), 0.0);
      row[static_cast<std::size_t>(c)] = 1.0;
      table.push_back(std::move(row));
    }
  return table;
}

BinSpec bins_from_json(const json& j) {
  try {
    BinSpec b;
    b.states = j.at("states").get<std::vector<std::string>>();
    for (const auto& x : j.at("boundaries"))
      b.boundaries.push_back(x.is_null() ? std::numeric_limits<double>::infinity() : x.get<double>());
    b.unit = j.value("unit", std::string{});
    if (j.contains("midpoints")) b.midpoints = j.at("midpoints").get<std::vector<double>>();
    validate_bins(b);
    return b;
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaError, std::string("malformed bin specification: ") + e.what());
  }
}

json bins_to_json(const BinSpec& bins) {
  json bounds = json::array();
  for (double x : bins.boundaries) bounds.push_back(std::isinf(x) ? json(nullptr) : json(x));
  json out = {{"states", bins.states}, {"boundaries", bounds}, {"unit", bins.unit}};
  if (!bins.midpoints.empty()) out["midpoints"] = bins.midpoints;
  return out;
}

}  // namespace oobnlab
