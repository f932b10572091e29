#pragma once

#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "vibesync/network.hpp"

namespace vibesync {

// v(t) = (amplitude / eps) * sin(frequency * t / eps + phase) added to the
// weight of `edge`, i.e. to W(edge.sink, edge.source).
struct VibrationEntry {
  Edge edge;
  double amplitude = 0.0;
  double frequency = 1.0;
  double phase = 0.0;
};

struct VibrationSchedule {
  double epsilon = 0.01;
  std::vector<VibrationEntry> entries;

  bool empty() const { return entries.empty(); }
  double max_frequency() const;
  // Throws ConfigError for nonexistent edges, bad frequencies or phases.
  void validate(const OscillatorNetwork& net) const;
};

// Builds an entry with a signed coefficient: negative values become a phase
// shift of pi so that amplitudes stay nonnegative.
VibrationEntry signed_entry(Edge edge, double coefficient, double frequency, double phase);

struct SimulationOptions {
  double t_span = 10.0;
  double step = 0.0;  // <= 0 selects the automatic step
  int record_stride = 1;
  bool parallel_rhs = false;
};

struct Trajectory {
  std::vector<double> t;
  Eigen::MatrixXd theta;  // samples x n, wrapped into [0, 2pi)
  std::vector<double> dist;
  Eigen::VectorXd final_unwrapped;
  double step = 0.0;

  int samples() const { return static_cast<int>(t.size()); }
};

double auto_step(double t_span, const VibrationSchedule* sched);

Trajectory simulate(const OscillatorNetwork& net, const ClusterPartition& part,
                    const VibrationSchedule* sched, const Eigen::VectorXd& theta0,
                    const SimulationOptions& opts);

struct SimulationJob {
  const OscillatorNetwork* net = nullptr;
  const ClusterPartition* part = nullptr;
  const VibrationSchedule* sched = nullptr;
  Eigen::VectorXd theta0;
  SimulationOptions opts;
};

// Runs independent jobs; the OpenMP path distributes whole jobs over threads.
std::vector<Trajectory> simulate_batch(const std::vector<SimulationJob>& jobs, bool parallel);

// Signed representative of a phase difference in (-pi, pi].
double wrap_pi(double a);
double wrap_2pi(double a);

struct IncrementalCoords {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
};

IncrementalCoords incremental_coords(const Eigen::VectorXd& theta,
                                     const IncidenceDecomposition& dec);

double manifold_distance(const Eigen::VectorXd& theta, const ClusterPartition& part);

enum class StabilityKind { decaying, bounded, growing };

struct StabilityVerdict {
  StabilityKind kind = StabilityKind::bounded;
  double rate = 0.0;  // decay rate (-slope); +inf when distance vanishes
  double slope = 0.0;
  double r_squared = 0.0;
};

const char* to_string(StabilityKind k);

StabilityVerdict classify_distance(const std::vector<double>& t, const std::vector<double>& dist,
                                   double window);
StabilityVerdict classify_stability(const Trajectory& traj, double window);

}  // namespace vibesync
