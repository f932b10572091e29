#include "vibesync/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "vibesync/errors.hpp"

namespace vibesync {

namespace {

double spectral_norm(const Eigen::MatrixXd& A) {
  if (A.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  return svd.singularValues()(0);
}

int cluster_of_column(const IncidenceDecomposition& dec, int c) {
  for (int k = 0; k < dec.r; ++k)
    if (c >= dec.intra_offset[k] && c < dec.intra_offset[k + 1]) return k;
  return -1;
}

}  // namespace

JacobianSet cluster_jacobians(const IncidenceDecomposition& dec) {
  JacobianSet js;
  js.transfer = transfer_matrix(dec);
  js.J = Eigen::MatrixXd::Zero(dec.x_dim(), dec.x_dim());
  for (int k = 0; k < dec.r; ++k) {
    Eigen::MatrixXd Jk = -dec.B_hat_intra_block(k).transpose() * dec.B_neg_intra_block(k) *
                         dec.W_intra_block(k).asDiagonal() * js.transfer.R1_blocks[k];
    js.J.block(dec.tree_offset[k], dec.tree_offset[k], Jk.rows(), Jk.cols()) = Jk;
    js.blocks.push_back(std::move(Jk));
  }
  return js;
}

Eigen::VectorXd intra_vector_field(const IncidenceDecomposition& dec, const TransferMatrix& T,
                                   const Eigen::VectorXd& x) {
  const Eigen::VectorXd s = (T.R1 * x).array().sin().matrix();
  return -dec.B_hat_intra().transpose() * dec.B_neg.leftCols(dec.intra_count) *
         dec.W_intra().asDiagonal() * s;
}

int edge_column(const IncidenceDecomposition& dec, Edge e) {
  for (int c = 0; c < dec.edge_count(); ++c)
    if (dec.edges[c] == e) return c;
  return -1;
}

Eigen::MatrixXd influence_matrix(const IncidenceDecomposition& dec, const TransferMatrix& T, int c) {
  const int k = cluster_of_column(dec, c);
  if (k < 0) throw ConfigError("influence requested for a non intra-cluster column");
  const int local = c - dec.intra_offset[k];
  return -dec.B_hat_intra_block(k).transpose() * dec.B_neg.col(c) * T.R1_blocks[k].row(local);
}

std::vector<PeriodicMatrixFunction> cluster_periodic_terms(const IncidenceDecomposition& dec,
                                                           const TransferMatrix& T,
                                                           const VibrationSchedule* sched) {
  std::vector<PeriodicMatrixFunction> out(dec.r);
  for (int k = 0; k < dec.r; ++k) out[k].dim = dec.cluster_tree_count(k);
  if (!sched) return out;
  for (std::size_t i = 0; i < sched->entries.size(); ++i) {
    const auto& e = sched->entries[i];
    const int c = edge_column(dec, e.edge);
    const int k = c < 0 ? -1 : cluster_of_column(dec, c);
    if (k < 0) {
      std::ostringstream os;
      os << "schedule entry " << i << " (" << e.edge.source << "->" << e.edge.sink
         << ") is not an intra-cluster edge";
      throw ConfigError(os.str());
    }
    out[k].terms.push_back({influence_matrix(dec, T, c), e.amplitude, e.frequency, e.phase});
  }
  return out;
}

double spectral_abscissa(const Eigen::MatrixXd& A) {
  if (A.size() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  return es.eigenvalues().real().maxCoeff();
}

bool is_hurwitz(const Eigen::MatrixXd& A) { return spectral_abscissa(A) < -1e-9; }

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A) {
  const int m = static_cast<int>(A.rows());
  if (A.cols() != m) throw NumericalError("Lyapunov solve needs a square matrix");
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  int worst = 0;
  for (int i = 1; i < m; ++i)
    if (es.eigenvalues()(i).real() > es.eigenvalues()(worst).real()) worst = i;
  if (m > 0 && es.eigenvalues()(worst).real() >= -1e-9) {
    const auto ev = es.eigenvalues()(worst);
    std::ostringstream os;
    os << "matrix is not Hurwitz: eigenvalue " << ev.real() << (ev.imag() < 0 ? "" : "+")
       << ev.imag() << "i";
    throw StabilityError(os.str(), ev.real(), ev.imag());
  }
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m, m);
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m * m, m * m);
  // vec(A' X) = (I kron A') vec X, vec(X A) = (A' kron I) vec X
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      K.block(a * m, b * m, m, m) += I(a, b) * A.transpose();
      K.block(a * m, b * m, m, m) += A(b, a) * I;
    }
  Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(I.data(), m * m);
  Eigen::VectorXd v = K.partialPivLu().solve(rhs);
  Eigen::MatrixXd X = Eigen::Map<Eigen::MatrixXd>(v.data(), m, m);
  return 0.5 * (X + X.transpose());
}

double robustness(const Eigen::MatrixXd& A) {
  const Eigen::MatrixXd X = solve_lyapunov(A);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(X, Eigen::EigenvaluesOnly);
  return 1.0 / es.eigenvalues().maxCoeff();
}

Eigen::MatrixXd perturbation_gains(const IncidenceDecomposition& dec, const TransferMatrix& T,
                                   const std::vector<ClusterNorms>& norms) {
  Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(dec.r, dec.r);
  const int off = dec.intra_count;
  for (int k = 0; k < dec.r; ++k) {
    std::vector<int> cols;
    for (int c = off; c < dec.edge_count(); ++c)
      if (dec.cluster_of[dec.edges[c].sink] == k) cols.push_back(c);
    if (cols.empty()) continue;
    const Eigen::MatrixXd Bh = dec.B_hat_intra_block(k);
    Eigen::MatrixXd A(Bh.cols(), static_cast<int>(cols.size()));
    Eigen::MatrixXd R2k(static_cast<int>(cols.size()), dec.x_dim());
    for (std::size_t q = 0; q < cols.size(); ++q) {
      A.col(q) = Bh.transpose() * dec.B_neg.col(cols[q]) * dec.weights(cols[q]);
      R2k.row(q) = T.R2.row(cols[q] - off);
    }
    const double a_norm = spectral_norm(A);
    for (int l = 0; l < dec.r; ++l) {
      const double r_norm = spectral_norm(R2k.middleCols(dec.tree_offset[l], dec.cluster_tree_count(l)));
      const double kappa = k == l ? norms[k].max_product : norms[k].max_psi * norms[l].max_phi;
      gamma(k, l) = kappa * a_norm * r_norm;
    }
  }
  return gamma;
}

MMatrixResult m_matrix_test(const Eigen::MatrixXd& S) {
  MMatrixResult res;
  const int m = static_cast<int>(S.rows());
  bool z = true;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (i != j && S(i, j) > 0.0) z = false;
  bool positive = true;
  for (int k = 1; k <= m; ++k) {
    const double det = S.topLeftCorner(k, k).determinant();
    res.minors.push_back(det);
    positive = positive && det > 0.0;
  }
  res.is_m_matrix = z && positive;
  return res;
}

const char* to_string(CertificateStatus s) {
  switch (s) {
    case CertificateStatus::certified: return "certified";
    case CertificateStatus::not_certified: return "not_certified";
    case CertificateStatus::inconclusive: return "inconclusive";
  }
  return "unknown";
}

StabilityCertificate certify(const OscillatorNetwork& net, const ClusterPartition& part,
                             const VibrationSchedule* sched, const CertifyOptions& opts) {
  net.validate();
  part.validate(net);
  const auto inv = check_invariance(net, part, opts.invariance_tol);
  if (!inv.pass) throw ConfigError("network does not satisfy the invariance condition for the partition");
  if (sched && sched->empty()) sched = nullptr;
  if (sched) sched->validate(net);

  const auto tree = select_spanning_tree(net, part, opts.tree);
  const auto dec = build_incidence(net, part, tree);
  const auto js = cluster_jacobians(dec);
  const auto terms = cluster_periodic_terms(dec, js.transfer, sched);

  StabilityCertificate cert;
  const int r = dec.r;
  cert.J = js.blocks;
  cert.averaging.resize(r);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < r; ++k) cert.averaging[k] = averaged_matrix(js.blocks[k], terms[k], opts.averaging);

  std::vector<ClusterNorms> norms(r);
  bool all_hurwitz = true, converged = true;
  for (int k = 0; k < r; ++k) {
    const auto& av = cert.averaging[k];
    cert.J_bar.push_back(av.J_bar);
    norms[k] = {av.max_phi, av.max_psi, av.max_product};
    if (!av.converged) {
      converged = false;
      std::ostringstream os;
      if (!av.bounded) os << "cluster " << k << ": transition matrix grows without bound, no averaged limit";
      else os << "cluster " << k << ": averaging did not converge (residual " << av.residual << ")";
      cert.causes.push_back(os.str());
    }
    if (!av.J_bar.allFinite()) {
      all_hurwitz = false;
      cert.abscissa.push_back(std::numeric_limits<double>::quiet_NaN());
      cert.hurwitz.push_back(false);
      cert.X.emplace_back();
      cert.robustness.push_back(0.0);
      continue;
    }
    const double a = spectral_abscissa(av.J_bar);
    cert.abscissa.push_back(a);
    const bool h = a < -1e-9;
    cert.hurwitz.push_back(h);
    if (h) {
      cert.X.push_back(solve_lyapunov(av.J_bar));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cert.X.back(), Eigen::EigenvaluesOnly);
      cert.robustness.push_back(1.0 / es.eigenvalues().maxCoeff());
    } else {
      all_hurwitz = false;
      cert.X.emplace_back();
      cert.robustness.push_back(0.0);
      std::ostringstream os;
      os << "cluster " << k << ": averaged Jacobian is not Hurwitz (spectral abscissa " << a << ")";
      cert.causes.push_back(os.str());
    }
  }
  cert.gamma = perturbation_gains(dec, js.transfer, norms);
  cert.S = -cert.gamma;
  for (int k = 0; k < r; ++k) cert.S(k, k) = cert.robustness[k] - cert.gamma(k, k);
  cert.m_matrix = m_matrix_test(cert.S);
  if (!cert.m_matrix.is_m_matrix) cert.causes.push_back("S is not an M-matrix");
  cert.verdict = all_hurwitz && cert.m_matrix.is_m_matrix && converged;
  cert.status = !converged ? CertificateStatus::inconclusive
                           : (cert.verdict ? CertificateStatus::certified : CertificateStatus::not_certified);
  return cert;
}

const char* to_string(Improvability i) {
  return i == Improvability::not_improvable ? "not_improvable" : "improvable_possibly";
}

Improvability necessary_condition(const OscillatorNetwork& cluster, double tol) {
  const int n = cluster.size();
  const double wmax = cluster.W.maxCoeff();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && !(cluster.W(i, j) > 0.0)) return Improvability::improvable_possibly;
  // Each sender must broadcast one weight to every receiver.
  for (int j = 0; j < n; ++j) {
    const double ref = cluster.W(j == 0 ? 1 : 0, j);
    for (int i = 0; i < n; ++i)
      if (i != j && std::abs(cluster.W(i, j) - ref) > tol * wmax) return Improvability::improvable_possibly;
  }
  return Improvability::not_improvable;
}

}  // namespace vibesync
