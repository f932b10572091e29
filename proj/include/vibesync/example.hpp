#pragma once

#include <vector>

#include <Eigen/Dense>

#include "vibesync/io.hpp"

namespace vibesync {

// Packaged two-cluster reconstruction used by `vibesync reproduce-example`.
ExperimentConfig packaged_example_config();

struct ExampleGroup {
  int target_row = 0;
  int target_col = 0;
  double frequency = 1.0;
  std::vector<std::pair<Edge, double>> edges;  // signed coefficients
};

struct ExampleReport {
  double alpha = 0.0;
  Eigen::MatrixXd J1_reference;     // including alpha
  Eigen::MatrixXd delta_reference;
  std::vector<Eigen::MatrixXd> J;   // computed cluster blocks
  double robustness_J1 = 0.0;
  double robustness_J1_delta = 0.0;
  std::vector<double> group_gains;  // k_g = sqrt(|delta| / |reverse entry|)
  VibrationSchedule schedule;       // sine phase, as published
  VibrationSchedule cosine_schedule;
  Eigen::MatrixXd J1_bar;           // cluster 0 under the published schedule
  Eigen::MatrixXd J1_bar_cosine;
  Trajectory uncontrolled;
  Trajectory controlled;
  StabilityVerdict verdict_uncontrolled;
  StabilityVerdict verdict_controlled;
  double distance_ratio = 0.0;      // controlled final / initial
  StabilityCertificate certificate;
};

std::vector<ExampleGroup> example_groups(const ExperimentConfig& cfg);

// Schedule with amplitude k_g on each group, from the reference delta.
VibrationSchedule published_schedule(const Eigen::MatrixXd& J1, const Eigen::MatrixXd& delta,
                                     const std::vector<ExampleGroup>& groups, double epsilon,
                                     double phase, std::vector<double>* gains = nullptr);

ExampleReport reproduce_example(const ExperimentConfig& cfg, bool simulate = true);

nlohmann::json to_json(const ExampleReport& r);

}  // namespace vibesync
