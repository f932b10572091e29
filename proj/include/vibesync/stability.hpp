#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vibesync/averaging.hpp"
#include "vibesync/dynamics.hpp"
#include "vibesync/network.hpp"

namespace vibesync {

struct JacobianSet {
  std::vector<Eigen::MatrixXd> blocks;  // J^(k), (n_k - 1) square
  Eigen::MatrixXd J;                    // block diagonal assembly
  TransferMatrix transfer;
};

JacobianSet cluster_jacobians(const IncidenceDecomposition& dec);

// Intra-cluster vector field f_intra(x) = -B_hat_intra' B_neg_intra W_intra sin(R1 x).
Eigen::VectorXd intra_vector_field(const IncidenceDecomposition& dec, const TransferMatrix& T,
                                   const Eigen::VectorXd& x);

// Column of edge (source -> sink) in the decomposition, or -1.
int edge_column(const IncidenceDecomposition& dec, Edge e);

// Influence of a unit weight change on intra column c, in cluster-local coordinates.
Eigen::MatrixXd influence_matrix(const IncidenceDecomposition& dec, const TransferMatrix& T, int c);

// Vibration term P^(k)(s) of each cluster under a schedule (fast time).
std::vector<PeriodicMatrixFunction> cluster_periodic_terms(const IncidenceDecomposition& dec,
                                                           const TransferMatrix& T,
                                                           const VibrationSchedule* sched);

double spectral_abscissa(const Eigen::MatrixXd& A);
bool is_hurwitz(const Eigen::MatrixXd& A);

// Solves A' X + X A = -I by dense Kronecker vectorization.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A);
double robustness(const Eigen::MatrixXd& A);

struct ClusterNorms {
  double max_phi = 1.0;
  double max_psi = 1.0;
  double max_product = 1.0;
};

Eigen::MatrixXd perturbation_gains(const IncidenceDecomposition& dec, const TransferMatrix& T,
                                   const std::vector<ClusterNorms>& norms);

struct MMatrixResult {
  bool is_m_matrix = false;
  std::vector<double> minors;
};

MMatrixResult m_matrix_test(const Eigen::MatrixXd& S);

enum class CertificateStatus { certified, not_certified, inconclusive };
const char* to_string(CertificateStatus s);

struct StabilityCertificate {
  CertificateStatus status = CertificateStatus::not_certified;
  bool verdict = false;
  std::vector<Eigen::MatrixXd> J;
  std::vector<Eigen::MatrixXd> J_bar;
  std::vector<bool> hurwitz;
  std::vector<double> abscissa;
  std::vector<Eigen::MatrixXd> X;
  std::vector<double> robustness;
  std::vector<AveragedMatrix> averaging;
  Eigen::MatrixXd gamma;
  Eigen::MatrixXd S;
  MMatrixResult m_matrix;
  std::vector<std::string> causes;
};

struct CertifyOptions {
  AveragingOptions averaging;
  TreeOptions tree;
  double invariance_tol = 1e-9;
};

StabilityCertificate certify(const OscillatorNetwork& net, const ClusterPartition& part,
                             const VibrationSchedule* sched, const CertifyOptions& opts = {});

enum class Improvability { improvable_possibly, not_improvable };
const char* to_string(Improvability i);

// Applies to a single homogeneous cluster given as its own network.
Improvability necessary_condition(const OscillatorNetwork& cluster, double tol = 1e-12);

}  // namespace vibesync
