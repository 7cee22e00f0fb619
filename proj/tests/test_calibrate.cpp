#include <gtest/gtest.h>

#include <cmath>

#include "oobnlab/bundle.hpp"
#include "oobnlab/calibrate.hpp"
#include "oobnlab/error.hpp"
#include "oobnlab/inference.hpp"

using namespace oobnlab;

namespace {

const ModelBundle& shipped() {
  static const ModelBundle b = load_bundle(OOBNLAB_DATA_DIR "/stateless-ethereum.oobn.json");
  return b;
}

CalibrationTarget healthy_target(double value, double tolerance) {
  CalibrationTarget t;
  t.id = "healthy";
  t.kind = TargetKind::Posterior;
  t.variable = "EthereumEcosystem";
  t.state = "healthy";
  t.preset = "base";
  t.value = value;
  t.tolerance = tolerance;
  return t;
}

ParameterRef ee_cell(const Network& net) {
  return parameter_ref(net, "EthereumEcosystem", {{"NodeKeepsUpWithHeadOfChain", "yes"}, {"UncleRate", "high"}},
                       "healthy");
}

double cell_value(const Network& net, const ParameterRef& ref) {
  const VarId v = net.id(ref.variable);
  return net.entry(v, ref.row, net.state_index(v, ref.state));
}

double healthy(const Network& net) { return marginal(net, "EthereumEcosystem", {}).at("healthy"); }

}  // namespace

TEST(Calibrate, SatisfiedTargetLeavesBundleUnchanged) {
  const ModelBundle& b = shipped();
  CalibrationOptions o;
  o.free_cells = {ee_cell(b.network())};
  const auto r = calibrate(b, {healthy_target(healthy(b.network()), 0.02)}, o);
  EXPECT_EQ(r.report.sweeps, 0u);
  EXPECT_EQ(r.report.moved_cells, 0u);
  EXPECT_TRUE(r.report.all_met);
  EXPECT_EQ(model_hash(r.bundle), model_hash(b));
}

// No evidence, so the posterior is linear in the one free cell and a single
// closed-form step lands on the target.
TEST(Calibrate, SingleCellLinearTargetSolvedInOneSweep) {
  const ModelBundle& b = shipped();
  const Network& net = b.network();
  const ParameterRef cell = ee_cell(net);
  const double t0 = cell_value(net, cell);
  const auto sf = sensitivity_function(net, {"EthereumEcosystem", "healthy"}, {}, cell);
  ASSERT_NEAR(sf.gamma, 0.0, 1e-12);
  const double t_star = t0 + 0.3 * (0.9 - t0);
  const double goal = sf(t_star);

  CalibrationOptions o;
  o.anchor = 0.0;
  o.free_cells = {cell};
  const auto r = calibrate(b, {healthy_target(goal, 0.02)}, o);
  EXPECT_EQ(r.report.sweeps, 1u);
  EXPECT_EQ(r.report.moved_cells, 1u);
  EXPECT_TRUE(r.report.converged);
  EXPECT_NEAR(cell_value(r.bundle.network(), cell), t_star, 1e-9);
  EXPECT_NEAR(healthy(r.bundle.network()), goal, 1e-9);
  EXPECT_EQ(r.bundle.library.at("StatelessEthereum").cpts.at("EthereumEcosystem").provenance,
            Provenance::Calibrated);

  // Only that one row changed.
  const VarId ee = net.id("EthereumEcosystem");
  for (std::size_t row = 0; row < net.row_count(ee); ++row)
    if (row != cell.row)
      for (std::size_t s = 0; s < 2; ++s) EXPECT_EQ(r.bundle.network().entry(ee, row, s), net.entry(ee, row, s));
  for (VarId v = 0; v < net.size(); ++v)
    if (v != ee) EXPECT_EQ(r.bundle.network().cpt(v), net.cpt(v)) << net.name(v);
}

TEST(Calibrate, AnchorHoldsCellsBetweenStartAndFit) {
  const ModelBundle& b = shipped();
  const Network& net = b.network();
  const ParameterRef cell = ee_cell(net);
  const double t0 = cell_value(net, cell);
  const auto sf = sensitivity_function(net, {"EthereumEcosystem", "healthy"}, {}, cell);
  const double t_star = t0 + 0.3 * (0.9 - t0);

  CalibrationOptions o;
  o.anchor = 5.0;
  o.free_cells = {cell};
  const auto r = calibrate(b, {healthy_target(sf(t_star), 0.02)}, o);
  const double t = cell_value(r.bundle.network(), cell);
  EXPECT_GT(t, t0);
  EXPECT_LT(t, t_star);
}

TEST(Calibrate, LearnedAndDeterministicCellsRejected) {
  const ModelBundle& b = shipped();
  CalibrationOptions o;
  o.free_cells = {{"blockCreation.Difficulty", 0, "high"}};
  EXPECT_THROW(calibrate(b, {healthy_target(0.5, 0.02)}, o), Error);
  o.free_cells = {{"blockPropagation.BlockAndWitnessProcessingTime", 0, "low"}};
  try {
    calibrate(b, {healthy_target(0.5, 0.02)}, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidArgument);
  }
}

TEST(Calibrate, UnreachableTargetReportedInfeasible) {
  const ModelBundle& b = shipped();
  CalibrationTarget t;
  t.id = "difficulty-high";
  t.variable = "Difficulty";
  t.state = "high";
  t.preset = "base";
  t.value = 0.95;
  t.tolerance = 0.01;
  CalibrationOptions o;
  o.free_cells = {ee_cell(b.network())};
  const auto r = calibrate(b, {t}, o);
  EXPECT_FALSE(r.report.all_met);
  EXPECT_EQ(r.report.infeasible, (std::vector<std::string>{"difficulty-high"}));
  const auto j = r.report.to_json();
  EXPECT_EQ(j.at("targets").at(0).at("status"), "infeasible");
  EXPECT_EQ(j.at("targets").at(0).at("feasible"), false);
}

TEST(Calibrate, ReferenceTargetsAreReportedNotFitted) {
  const ModelBundle& b = shipped();
  auto reference = healthy_target(0.99, 0.01);
  reference.fit = false;
  CalibrationOptions o;
  o.free_cells = {ee_cell(b.network())};
  const auto r = calibrate(b, {reference}, o);
  EXPECT_EQ(r.report.moved_cells, 0u);
  EXPECT_TRUE(r.report.unmet.empty());
  EXPECT_EQ(r.report.to_json().at("targets").at(0).at("status"), "reference-mismatch");
}

TEST(Calibrate, BadBoundsRejected) {
  CalibrationOptions o;
  o.lower = 0.5;
  o.upper = 0.4;
  EXPECT_THROW(calibrate(shipped(), {healthy_target(0.5, 0.02)}, o), Error);
}

// The shipped bundle is the output of the shipped calibration run, so every
// fitted target it carries is already within tolerance.
TEST(Calibrate, ShippedBundleMeetsItsFittedTargets) {
  const ModelBundle& b = shipped();
  for (const auto& t : b.targets) {
    if (!t.fit) continue;
    EXPECT_NEAR(evaluate_target(b, b.network(), t), t.value, t.tolerance) << t.id;
  }
}
