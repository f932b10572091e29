// vibesync command line: simulate, analyze, design, verify, reproduce-example.
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <omp.h>

#include "vibesync/designer.hpp"
#include "vibesync/errors.hpp"
#include "vibesync/example.hpp"
#include "vibesync/io.hpp"
#include "vibesync/stability.hpp"

namespace fs = std::filesystem;
using namespace vibesync;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kValidation = 2, kNumerical = 3, kVerdict = 4 };

struct Args {
  std::string command;
  std::string config;
  std::string out = ".";
  std::optional<double> epsilon;
  std::optional<double> t_span;
  std::optional<double> step;
};

void apply_overrides(ExperimentConfig& cfg, const Args& a) {
  if (a.epsilon) {
    if (!(*a.epsilon > 0.0)) throw ConfigError("--epsilon: must be positive");
    cfg.design.epsilon = *a.epsilon;
    if (cfg.schedule) cfg.schedule->epsilon = *a.epsilon;
    if (cfg.raw.contains("reference")) cfg.raw["reference"]["epsilon"] = *a.epsilon;
  }
  if (a.t_span) {
    if (!(*a.t_span > 0.0)) throw ConfigError("--t-span: must be positive");
    cfg.sim.t_span = cfg.design.t_span = *a.t_span;
  }
  if (a.step) {
    if (!(*a.step > 0.0)) throw ConfigError("--step: must be positive");
    cfg.sim.step = *a.step;
  }
}

Trajectory run_simulation(const ExperimentConfig& cfg, const VibrationSchedule* sched) {
  SimulationOptions so;
  so.t_span = cfg.sim.t_span;
  so.step = cfg.sim.step;
  const double h = so.step > 0.0 ? so.step : auto_step(so.t_span, sched);
  so.record_stride = cfg.sim.record_stride > 0
                         ? cfg.sim.record_stride
                         : std::max(1, static_cast<int>(std::ceil(so.t_span / h / 5000.0)));
  return simulate(cfg.net, cfg.part, sched, initial_phases(cfg), so);
}

int run(const Args& a) {
  fs::create_directories(a.out);
  const fs::path out(a.out);
  ExperimentConfig cfg;
  if (a.command == "reproduce-example" && a.config.empty()) cfg = packaged_example_config();
  else if (a.config.empty()) throw ConfigError("--config: required for " + a.command);
  else cfg = load_config(a.config);
  apply_overrides(cfg, a);

  json summary = {{"command", a.command}};
  int code = kOk;
  const VibrationSchedule* sched = cfg.schedule ? &*cfg.schedule : nullptr;

  if (a.command == "simulate") {
    const auto traj = run_simulation(cfg, sched);
    export_trajectory(traj, (out / "trajectory.csv").string());
    const auto v = classify_stability(traj, std::min(cfg.sim.window, cfg.sim.t_span / 2.5));
    summary["verdict"] = to_json(v);
    summary["initial_distance"] = traj.dist.front();
    summary["final_distance"] = traj.dist.back();
    summary["step"] = traj.step;
    summary["samples"] = traj.samples();
    if (cfg.require.decaying && v.kind != StabilityKind::decaying) code = kVerdict;
  } else if (a.command == "analyze" || a.command == "verify") {
    const auto cert = certify(cfg.net, cfg.part, sched, cfg.design.certify);
    write_json(to_json(cert), (out / "certificate.json").string());
    summary["verdict"] = cert.verdict;
    summary["status"] = to_string(cert.status);
    summary["robustness"] = cert.robustness;
    if (a.command == "analyze") {
      json clusters = json::array();
      for (int k = 0; k < cfg.part.cluster_count(); ++k) {
        const auto sub = induced_subnetwork(cfg.net, cfg.part.blocks[k]);
        json c = {{"cluster", k}, {"necessary_condition", to_string(necessary_condition(sub))}};
        if (is_hurwitz(cert.J[k]) && cert.J[k].size() > 0) c["robustness_uncontrolled"] = robustness(cert.J[k]);
        clusters.push_back(c);
      }
      summary["clusters"] = clusters;
      if (cfg.require.certified && !cert.verdict) code = kVerdict;
    } else if (!cert.verdict) {
      code = kVerdict;
    }
  } else if (a.command == "design") {
    const auto res = end_to_end_design(cfg.net, cfg.part, cfg.design);
    write_json(to_json(res), (out / "design_report.json").string());
    write_json(to_json(res.certificate), (out / "certificate.json").string());
    write_json(to_json(res.schedule), (out / "schedule.json").string());
    summary["certificate_verdict"] = res.certificate.verdict;
    summary["schedule_entries"] = res.schedule.entries.size();
    summary["simulation"] = {{"verdict", to_json(res.verdict)},
                             {"initial_distance", res.initial_distance},
                             {"final_distance", res.final_distance}};
    if (cfg.require.certified && !res.certificate.verdict) code = kVerdict;
    if (cfg.require.decaying && res.verdict.kind != StabilityKind::decaying) code = kVerdict;
  } else if (a.command == "reproduce-example") {
    const auto rep = reproduce_example(cfg);
    export_trajectory(rep.uncontrolled, (out / "uncontrolled.csv").string());
    export_trajectory(rep.controlled, (out / "controlled.csv").string());
    write_json(to_json(rep.certificate), (out / "certificate.json").string());
    summary["example"] = to_json(rep);
    summary["uncontrolled"] = rep.verdict_uncontrolled.kind == StabilityKind::decaying ? "stable" : "unstable";
    summary["controlled"] = rep.verdict_controlled.kind == StabilityKind::decaying ? "stabilized" : "not_stabilized";
    if (rep.verdict_uncontrolled.kind == StabilityKind::decaying ||
        rep.verdict_controlled.kind != StabilityKind::decaying)
      code = kVerdict;
  } else {
    throw ConfigError("unknown command " + a.command);
  }
  summary["exit_code"] = code;
  write_json(summary, (out / "summary.json").string());
  std::cout << summary.dump(2) << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vibrational control of cluster synchronization in Kuramoto networks"};
  Args a;
  app.add_option("command", a.command, "simulate | analyze | design | verify | reproduce-example")
      ->required()
      ->check(CLI::IsMember({"simulate", "analyze", "design", "verify", "reproduce-example"}));
  app.add_option("--config", a.config, "experiment config (JSON)");
  app.add_option("--out", a.out, "output directory");
  app.add_option("--epsilon", a.epsilon, "time-scale ratio override");
  app.add_option("--t-span", a.t_span, "simulation horizon override");
  app.add_option("--step", a.step, "integration step override");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kValidation;
  }
  if (const char* env = std::getenv("VIBESYNC_THREADS")) {
    const int t = std::atoi(env);
    if (t > 0) omp_set_num_threads(t);
  }
  try {
    return run(a);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const StructuralError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  }
}
