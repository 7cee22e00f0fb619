#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "oobnlab/calibrate.hpp"
#include "oobnlab/error.hpp"
#include "oobnlab/network_io.hpp"
#include "oobnlab/report.hpp"
#include "oobnlab/service.hpp"
#include "oobnlab/stateless.hpp"

using namespace oobnlab;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

std::string default_bundle() {
  if (const char* env = std::getenv("OOBN_LAB_BUNDLE"); env && *env) return env;
  return OOBNLAB_DEFAULT_BUNDLE;
}

Evidence parse_evidence(const std::vector<std::string>& findings) {
  Evidence ev;
  for (const auto& f : findings) {
    auto [k, v] = parse_finding(f);
    ev[k] = v;
  }
  return ev;
}

Precision parse_precision(const std::string& p) {
  if (p == "full") return Precision::Full;
  if (p == "rounded" || p == "6") return Precision::Rounded;
  throw Error(Errc::InvalidArgument, "--precision must be 'full' or 'rounded'");
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::UnknownPreset:
    case Errc::InvalidArgument:
    case Errc::UnknownVariable:
    case Errc::UnknownState:
    case Errc::AmbiguousName:
      return kUsage;
    default:
      return kFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"oobn-lab: object-oriented Bayesian network engine with the Stateless Ethereum model"};
  app.require_subcommand(1);
  std::string bundle_path = default_bundle();
  std::string precision = "rounded";
  std::vector<std::string> findings;

  auto add_bundle = [&](CLI::App* cmd) {
    cmd->add_option("-b,--bundle", bundle_path, "model bundle (default: $OOBN_LAB_BUNDLE or the shipped bundle)");
  };

  auto* validate = app.add_subcommand("validate", "check a bundle and list every problem found");
  add_bundle(validate);
  validate->add_option("path", bundle_path, "bundle to check");

  auto* infer = app.add_subcommand("infer", "posterior of every variable given evidence");
  add_bundle(infer);
  infer->add_option("-e,--evidence", findings, "finding Variable=state (repeatable)");
  infer->add_option("--precision", precision, "rounded (6 decimals) or full");

  std::string preset;
  std::string compare;
  auto* scenario = app.add_subcommand("scenario", "run a scenario preset or ad-hoc evidence");
  add_bundle(scenario);
  scenario->add_option("preset", preset, "preset name");
  scenario->add_option("-e,--evidence", findings, "finding Variable=state (repeatable)");
  scenario->add_option("--compare", compare, "add changes against this preset");
  scenario->add_option("--precision", precision, "rounded (6 decimals) or full");

  std::string hypothesis;
  std::string sens_scenario;
  bool evidence_sensitivity = false;
  std::size_t top = 20;
  auto* sensitivity = app.add_subcommand("sensitivity", "parameter and evidence sensitivity of a hypothesis");
  add_bundle(sensitivity);
  sensitivity->add_option("--hypothesis", hypothesis, "Variable=state")->required();
  sensitivity->add_option("--scenario", sens_scenario, "preset name, or 'none'");
  sensitivity->add_option("-e,--evidence", findings, "extra finding Variable=state (repeatable)");
  sensitivity->add_flag("--evidence-sensitivity", evidence_sensitivity, "also report per-variable evidence ranges");
  sensitivity->add_option("--top", top, "number of ranked parameters to list (0 = all)");
  sensitivity->add_option("--precision", precision, "rounded (6 decimals) or full");

  std::string data_path, sidecar_path, out_path, report_path;
  double smoothing = 1.0;
  auto* learn = app.add_subcommand("learn", "re-estimate learned CPTs from block/witness data");
  add_bundle(learn);
  learn->add_option("--data", data_path, "CSV with one row per block")->required();
  learn->add_option("--sidecar", sidecar_path, "column/bin declaration (default: bundle metadata)");
  learn->add_option("--smoothing", smoothing, "pseudo-count added to every cell")->check(CLI::NonNegativeNumber);
  learn->add_option("-o,--out", out_path, "where to write the updated bundle")->required();

  std::size_t max_sweeps = 200;
  double anchor = CalibrationOptions{}.anchor;
  auto* calibrate_cmd = app.add_subcommand("calibrate", "fit elicited CPTs to the bundle's calibration targets");
  add_bundle(calibrate_cmd);
  calibrate_cmd->add_option("-o,--out", out_path, "where to write the calibrated bundle")->required();
  calibrate_cmd->add_option("--report", report_path, "also write the residual report here");
  calibrate_cmd->add_option("--max-sweeps", max_sweeps, "iteration cap");
  calibrate_cmd->add_option("--anchor", anchor, "weight of the pull toward the elicited values")
      ->check(CLI::NonNegativeNumber);

  ServiceConfig config;
  std::string static_dir;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP service for the web explorer and scripts");
  add_bundle(serve_cmd);
  serve_cmd->add_option("--host", config.host, "bind address");
  serve_cmd->add_option("--port", config.port, "TCP port")->check(CLI::Range(1, 65535));
  serve_cmd->add_option("--static-dir", static_dir, "serve a built web UI from this directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*validate) {
      const auto diags = validate_bundle_json(read_json_file(bundle_path));
      if (diags.empty()) {
        const ModelBundle b = load_bundle(bundle_path);
        std::cout << json{{"ok", true},
                          {"bundle", bundle_path},
                          {"variables", b.network().size()},
                          {"templates", b.library.templates().size()},
                          {"model_hash", model_hash(b)}}
                         .dump()
                  << "\n";
        return kOk;
      }
      for (const auto& d : diags) std::cout << d.dump() << "\n";
      return kFailure;
    }

    const ModelBundle bundle = load_bundle(bundle_path);
    const Precision prec = parse_precision(precision);

    if (*infer) {
      std::cout << render(infer_report(bundle, parse_evidence(findings)), prec);
    } else if (*scenario) {
      ScenarioRequest req;
      if (!preset.empty() && !findings.empty())
        throw Error(Errc::InvalidArgument, "give either a preset or --evidence, not both");
      if (!preset.empty()) req.preset = preset;
      if (preset.empty() && findings.empty()) req.preset = "base";
      req.evidence = parse_evidence(findings);
      if (!compare.empty()) req.compare = compare;
      std::cout << render(scenario_report(bundle, req), prec);
    } else if (*sensitivity) {
      SensitivityRequest req;
      req.hypothesis = hypothesis;
      if (!sens_scenario.empty()) req.scenario = sens_scenario;
      req.evidence = parse_evidence(findings);
      req.evidence_sensitivity = evidence_sensitivity;
      req.top = top;
      std::cout << render(sensitivity_report(bundle, req), prec);
    } else if (*learn) {
      const Dataset data = sidecar_path.empty() ? ingest_block_witness_csv(data_path, bundle)
                                                : load_dataset(data_path, sidecar_path);
      const LearnResult result = learn_bundle(bundle, data, smoothing);
      save_bundle(result.bundle, out_path);
      json learned = json::array();
      for (const auto& l : result.learned)
        learned.push_back({{"template", l.template_name}, {"node", l.node}, {"rows", l.rows}});
      std::cout << json{{"records", result.records},
                        {"smoothing", result.smoothing},
                        {"learned", learned},
                        {"out", out_path}}
                       .dump(2)
                << "\n";
    } else if (*calibrate_cmd) {
      CalibrationOptions opts;
      opts.max_sweeps = max_sweeps;
      opts.anchor = anchor;
      const CalibrationResult result = calibrate(bundle, opts);
      save_bundle(result.bundle, out_path);
      const json report = result.report.to_json();
      if (!report_path.empty()) write_json_file(report, report_path);
      std::cout << render(report);
      if (!result.report.all_met)
        std::cerr << Error(Errc::CalibrationFailed, "some calibration targets are outside tolerance",
                           {{"unmet", result.report.unmet}, {"infeasible", result.report.infeasible}})
                         .to_json()
                         .dump()
                  << "\n";
    } else if (*serve_cmd) {
      config.bundle = bundle_path;
      if (!static_dir.empty()) config.static_dir = static_dir;
      const Service service(bundle);
      std::cerr << "oobn-lab serving " << bundle_path << " on http://" << config.host << ":" << config.port << "\n";
      serve(service, config);
    }
    return kOk;
  } catch (const Error& e) {
    std::cerr << e.to_json().dump() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "InternalError"}, {"message", e.what()}}.dump() << "\n";
    return kFailure;
  }
}
