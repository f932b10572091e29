#pragma once

#include <compare>
#include <vector>

#include <Eigen/Dense>

namespace vibesync {

// Directed edge source -> sink. Its weight lives at W(sink, source).
struct Edge {
  int source = 0;
  int sink = 0;
  auto operator<=>(const Edge&) const = default;
};

struct OscillatorNetwork {
  Eigen::VectorXd omega;
  Eigen::MatrixXd W;  // W(i, j): coupling from node j into node i

  int size() const { return static_cast<int>(omega.size()); }
  bool has_link(int a, int b) const { return W(a, b) > 0.0 || W(b, a) > 0.0; }
  // Throws StructuralError on negative weights, self loops, size mismatch or
  // a disconnected underlying graph.
  void validate() const;
};

struct ClusterPartition {
  std::vector<std::vector<int>> blocks;

  int cluster_count() const { return static_cast<int>(blocks.size()); }
  // Cluster index per node. Throws StructuralError on overlap or gaps.
  std::vector<int> labels(int n) const;
  // Full check against a network, including block connectivity.
  void validate(const OscillatorNetwork& net) const;
};

struct InvarianceViolation {
  int i = 0;
  int j = 0;
  int cluster = 0;  // the other block l
  double gap = 0.0;
};

struct InvarianceReport {
  bool pass = true;
  std::vector<std::pair<int, int>> frequency_violations;
  std::vector<InvarianceViolation> weight_violations;
};

InvarianceReport check_invariance(const OscillatorNetwork& net, const ClusterPartition& part,
                                  double tol = 1e-9);

struct SpanningTree {
  std::vector<std::vector<Edge>> intra;  // per cluster, oriented parent -> child
  std::vector<Edge> inter;
  std::vector<int> roots;
};

// Optional overrides. roots[k] < 0 or missing means automatic; a nonempty
// intra[k] is used verbatim after validation.
struct TreeOptions {
  std::vector<int> roots;
  std::vector<std::vector<Edge>> intra;
};

SpanningTree select_spanning_tree(const OscillatorNetwork& net, const ClusterPartition& part,
                                  const TreeOptions& opts = {});

struct IncidenceDecomposition {
  int n = 0;
  int r = 0;
  std::vector<Edge> edges;          // all 2m columns, intra first
  std::vector<int> intra_offset;    // r + 1 column offsets into edges
  int intra_count = 0;              // 2 m_intra
  Eigen::MatrixXd B;                // n x 2m
  Eigen::MatrixXd B_neg;
  Eigen::VectorXd weights;          // column weights W(sink, source)
  SpanningTree tree;
  std::vector<Edge> tree_edges;     // intra (by cluster) then inter
  std::vector<int> tree_offset;     // r + 1 offsets into tree_edges
  Eigen::MatrixXd B_hat;            // n x (n - 1)
  std::vector<int> cluster_of;

  int edge_count() const { return static_cast<int>(edges.size()); }
  int inter_count() const { return edge_count() - intra_count; }
  int x_dim() const { return n - r; }
  int y_dim() const { return r - 1; }

  Eigen::MatrixXd B_intra() const { return B.leftCols(intra_count); }
  Eigen::MatrixXd B_inter() const { return B.rightCols(inter_count()); }
  Eigen::MatrixXd B_hat_intra() const { return B_hat.leftCols(x_dim()); }
  Eigen::MatrixXd B_hat_inter() const { return B_hat.rightCols(y_dim()); }
  Eigen::VectorXd W_intra() const { return weights.head(intra_count); }
  Eigen::VectorXd W_inter() const { return weights.tail(inter_count()); }

  // Column block of cluster k in B_intra and in B_hat_intra (full n rows).
  Eigen::MatrixXd B_intra_block(int k) const;
  Eigen::MatrixXd B_neg_intra_block(int k) const;
  Eigen::MatrixXd B_hat_intra_block(int k) const;
  Eigen::VectorXd W_intra_block(int k) const;
  int cluster_edge_count(int k) const { return intra_offset[k + 1] - intra_offset[k]; }
  int cluster_tree_count(int k) const { return tree_offset[k + 1] - tree_offset[k]; }
};

IncidenceDecomposition build_incidence(const OscillatorNetwork& net, const ClusterPartition& part,
                                       const SpanningTree& tree);

struct TransferMatrix {
  Eigen::MatrixXd R;                 // 2m x (n - 1)
  Eigen::MatrixXd R1;                // 2m_intra x (n - r), block diagonal by cluster
  Eigen::MatrixXd R2;                // 2m_inter x (n - r)
  Eigen::MatrixXd R3;                // 2m_inter x (r - 1)
  std::vector<Eigen::MatrixXd> R1_blocks;
};

// Moore-Penrose inverse via SVD, singular values below cutoff * sigma_max dropped.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& A, double cutoff = 1e-12, int* rank = nullptr);

// Throws NumericalError when a projected tree block loses column rank.
TransferMatrix transfer_matrix(const IncidenceDecomposition& dec);

// Network induced on one block, nodes relabelled 0..n_k-1 in block order.
OscillatorNetwork induced_subnetwork(const OscillatorNetwork& net, const std::vector<int>& nodes);

}  // namespace vibesync
