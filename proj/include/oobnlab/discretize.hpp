#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace oobnlab {

// Ordinal bins over a continuous quantity: state i covers [boundaries[i],
// boundaries[i+1]). The last boundary may be +infinity (null in JSON).
struct BinSpec {
  std::vector<std::string> states;
  std::vector<double> boundaries;
  std::string unit;
  std::vector<double> midpoints;  // optional representative values, same unit

  bool operator==(const BinSpec&) const = default;
};

// Throws NonMonotoneBins unless there is one more boundary than states and the
// boundaries strictly increase.
void validate_bins(const BinSpec& bins);

// Index of the bin containing x, or -1 when x lies outside the cover.
long bin_index(const BinSpec& bins, double x);

struct Discretized {
  std::vector<std::size_t> states;
  BinSpec bins;
  std::vector<std::string> warnings;
};

// Throws NonMonotoneBins, or InvalidArgument for a value outside the bins.
Discretized discretize(std::span<const double> values, const BinSpec& bins);

// Equal-frequency bins from type-7 sample quantiles; the lowest boundary is the
// sample minimum and the top bin is open. Coinciding quantiles are separated by
// one ulp and reported as a warning, which leaves those bins empty.
Discretized discretize_quantiles(std::span<const double> values, std::vector<std::string> states, std::string unit);

// Sample quantile, linear interpolation between order statistics (type 7).
double quantile(std::vector<double> values, double p);

// Point-mass table for child = a + b using bin midpoints; rows in (a, b) order
// with b varying fastest. Throws UnitMismatch, SumOutOfRange, InvalidArgument
// when midpoints are missing.
std::vector<std::vector<double>> deterministic_sum_cpt(const BinSpec& a, const BinSpec& b, const BinSpec& child);

BinSpec bins_from_json(const nlohmann::json& j);
nlohmann::json bins_to_json(const BinSpec& bins);

}  // namespace oobnlab
