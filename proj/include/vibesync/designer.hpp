#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vibesync/dynamics.hpp"
#include "vibesync/network.hpp"
#include "vibesync/stability.hpp"

namespace vibesync {

// Graph edges follow the matrix convention: edge (source -> sink) is entry
// A(sink, source).
struct ModifiableGraph {
  std::vector<Edge> increasable;
  std::vector<Edge> decreasable;
  Eigen::MatrixXi sign;  // by entry: +1 increasable, -1 decreasable, 0 neither
};

ModifiableGraph modifiable_graph(const Eigen::MatrixXd& A);

struct InfluenceBasis {
  int cluster = 0;
  int dim = 0;
  std::vector<int> columns;         // intra columns of the decomposition
  std::vector<Edge> edges;
  std::vector<bool> vibratable;     // edge carries positive weight
  std::vector<Eigen::MatrixXd> M;   // cluster-local influence matrices
};

InfluenceBasis influence_basis(const IncidenceDecomposition& dec, const TransferMatrix& T, int cluster);

// P(s) for per-edge signals v_e(s), straight from the basis.
Eigen::MatrixXd reconstruct_influence(const InfluenceBasis& basis, const Eigen::VectorXd& v);

struct ReducedBasis {
  InfluenceBasis basis;
  ModifiableGraph mod;
  std::vector<Eigen::MatrixXd> masked;                          // P1 terms
  std::vector<std::vector<std::pair<int, int>>> offdiag_support;  // of masked terms
  std::vector<int> pool;        // exactly one masked off-diagonal entry
  std::vector<int> cancellers;  // diagonal-only masked influence
};

ReducedBasis reduce_influence(const InfluenceBasis& basis, const ModifiableGraph& mod);

struct Target {
  int row = 0;
  int col = 0;
  int sign = 0;  // +1 increase, -1 decrease
  std::vector<std::pair<int, double>> recipe;  // (basis index, coefficient)
};

enum class PatternPolicy { chain_free, dag };

struct RealizablePattern {
  std::vector<Target> targets;
  bool chain_free = true;
};

std::vector<RealizablePattern> realizable_patterns(const ReducedBasis& reduced,
                                                   PatternPolicy policy = PatternPolicy::chain_free);

bool support_is_acyclic(int dim, const std::vector<std::pair<int, int>>& entries);

struct DeltaDesign {
  Eigen::MatrixXd delta;
  double robustness_before = 0.0;
  double robustness_after = 0.0;
  bool improved = false;
  bool exhaustive = false;
};

std::vector<double> default_magnitude_grid(const Eigen::MatrixXd& J);

DeltaDesign design_delta(const Eigen::MatrixXd& J, const RealizablePattern& pattern,
                         const std::vector<double>& magnitudes);

// sqrt of the k-th prime (k = 0 gives sqrt 2).
double prime_root(int k);

VibrationSchedule synthesize_schedule(const Eigen::MatrixXd& delta, const RealizablePattern& pattern,
                                      const Eigen::MatrixXd& J, const InfluenceBasis& basis,
                                      double epsilon, int first_prime = 0);

struct ClusterDesign {
  int cluster = 0;
  Eigen::MatrixXd J;
  ModifiableGraph mod;
  std::vector<RealizablePattern> patterns;
  int chosen = -1;
  DeltaDesign delta;
};

struct DesignOptions {
  double epsilon = 0.01;
  PatternPolicy policy = PatternPolicy::chain_free;
  CertifyOptions certify;
  double t_span = 50.0;
  double spread = 1e-2;
  unsigned long seed = 1;
  double window = 10.0;
  bool simulate = true;
};

struct DesignResult {
  VibrationSchedule schedule;
  std::vector<ClusterDesign> clusters;
  StabilityCertificate certificate;
  bool simulated = false;
  StabilityVerdict verdict;
  double initial_distance = 0.0;
  double final_distance = 0.0;
};

DesignResult end_to_end_design(const OscillatorNetwork& net, const ClusterPartition& part,
                               const DesignOptions& opts = {});

// Random point of the manifold plus a uniform perturbation of size spread.
Eigen::VectorXd theta_near_manifold(const ClusterPartition& part, int n, double spread,
                                    unsigned long seed);

}  // namespace vibesync
