#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace vibesync {

// One sinusoidal term amplitude * sin(frequency * s + phase) * M, s fast time.
struct PeriodicTerm {
  Eigen::MatrixXd M;
  double amplitude = 0.0;
  double frequency = 1.0;
  double phase = 0.0;
};

struct PeriodicMatrixFunction {
  int dim = 0;
  std::vector<PeriodicTerm> terms;

  bool zero() const { return terms.empty(); }
  double max_frequency() const;
  double min_frequency() const;
  Eigen::MatrixXd eval(double s) const;
};

// Fundamental period shared by all frequencies, if they are rationally
// related with small denominators.
std::optional<double> common_period(const std::vector<double>& frequencies);

// Phi(s1, s0) of dPhi/ds = P(s) Phi via RK4 with the given step.
Eigen::MatrixXd transition_matrix(const PeriodicMatrixFunction& P, double s0, double s1,
                                  double step);

struct AveragingOptions {
  double rtol = 1e-6;
  int horizon_cap = 4000;        // in windows
  double window_periods = 50.0;  // window length in periods of the slowest term
  int steps_per_period = 200;    // RK4 steps per period of the fastest term
  bool force_long_horizon = false;
};

struct AveragedMatrix {
  Eigen::MatrixXd J_bar;
  double horizon = 0.0;
  double residual = 0.0;
  bool converged = true;
  bool exact_period = false;
  bool bounded = true;  // false when Phi grows without bound (no averaged limit)
  // Norm extremes of Phi, Phi^{-1} and their product over the horizon.
  double max_phi = 1.0;
  double max_psi = 1.0;
  double max_product = 1.0;
};

AveragedMatrix averaged_matrix(const Eigen::MatrixXd& J, const PeriodicMatrixFunction& P,
                               const AveragingOptions& opts = {});

// Averaged change of a forward entry when its partner edge carries a cosine
// vibration of amplitude u and frequency beta: -a_reverse u^2 / (2 beta^2).
double effective_weight_shift(double a_reverse, double u, double beta);
// Amplitude that produces shift d; requires sign(d) = -sign(a_reverse).
double amplitude_for_shift(double d, double a_reverse, double beta);

}  // namespace vibesync
