#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vibesync/designer.hpp"
#include "vibesync/dynamics.hpp"
#include "vibesync/network.hpp"
#include "vibesync/stability.hpp"

namespace vibesync {

inline constexpr const char* kConfigSchema = "vibesync-config/1";

struct SimulationSettings {
  double t_span = 50.0;
  double step = 0.0;
  int record_stride = 0;  // 0 picks a stride giving about 5000 rows
  std::optional<Eigen::VectorXd> theta0;
  unsigned long seed = 1;
  double spread = 1e-2;
  double window = 10.0;
};

struct Requirements {
  bool certified = false;
  bool decaying = false;
};

struct ExperimentConfig {
  OscillatorNetwork net;
  ClusterPartition part;
  TreeOptions tree;
  std::optional<VibrationSchedule> schedule;
  SimulationSettings sim;
  DesignOptions design;
  Requirements require;
  nlohmann::json raw;
};

// Throws ConfigError naming the offending path.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

Eigen::VectorXd initial_phases(const ExperimentConfig& cfg);

std::string format_number(double v);
std::string trajectory_csv(const Trajectory& traj);
void export_trajectory(const Trajectory& traj, const std::string& path);

struct ParsedTrajectory {
  std::vector<double> t;
  Eigen::MatrixXd theta;
  std::vector<double> dist;
};
ParsedTrajectory parse_trajectory_csv(const std::string& text);

nlohmann::json to_json(const Eigen::MatrixXd& m);
nlohmann::json to_json(const StabilityVerdict& v);
nlohmann::json to_json(const VibrationSchedule& s);
nlohmann::json to_json(const StabilityCertificate& c);
nlohmann::json to_json(const DesignResult& d);

// Key-sorted, two-space indented, trailing newline.
void write_json(const nlohmann::json& j, const std::string& path);

}  // namespace vibesync
