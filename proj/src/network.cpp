#include "vibesync/network.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <numeric>
#include <sstream>

#include "vibesync/errors.hpp"

namespace vibesync {

namespace {

std::vector<std::vector<int>> adjacency(const OscillatorNetwork& net) {
  const int n = net.size();
  std::vector<std::vector<int>> adj(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (a != b && net.has_link(a, b)) adj[a].push_back(b);
  return adj;
}

// BFS restricted to allowed nodes; returns depth per node (-1 unreached).
std::vector<int> bfs_depth(const std::vector<std::vector<int>>& adj, int root,
                           const std::vector<char>& allowed, std::vector<int>* parent) {
  std::vector<int> depth(adj.size(), -1);
  if (parent) parent->assign(adj.size(), -1);
  std::deque<int> queue{root};
  depth[root] = 0;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (int v : adj[u]) {
      if (!allowed[v] || depth[v] >= 0) continue;
      depth[v] = depth[u] + 1;
      if (parent) (*parent)[v] = u;
      queue.push_back(v);
    }
  }
  return depth;
}

std::vector<char> mask_of(int n, const std::vector<int>& nodes) {
  std::vector<char> m(n, 0);
  for (int v : nodes) m[v] = 1;
  return m;
}

}  // namespace

void OscillatorNetwork::validate() const {
  const int n = size();
  if (n < 2) throw StructuralError("network needs at least 2 nodes");
  if (W.rows() != n || W.cols() != n)
    throw StructuralError("weight matrix is not n x n");
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(omega(i))) throw StructuralError("non-finite natural frequency");
    for (int j = 0; j < n; ++j) {
      if (!std::isfinite(W(i, j)) || W(i, j) < 0.0) {
        std::ostringstream os;
        os << "weight w(" << i << "," << j << ") must be finite and nonnegative";
        throw StructuralError(os.str());
      }
    }
    if (W(i, i) != 0.0) {
      std::ostringstream os;
      os << "self loop at node " << i;
      throw StructuralError(os.str());
    }
  }
  const auto depth = bfs_depth(adjacency(*this), 0, std::vector<char>(n, 1), nullptr);
  for (int v = 0; v < n; ++v)
    if (depth[v] < 0) {
      std::ostringstream os;
      os << "network is disconnected at node " << v;
      throw StructuralError(os.str());
    }
}

std::vector<int> ClusterPartition::labels(int n) const {
  std::vector<int> lab(n, -1);
  for (int k = 0; k < cluster_count(); ++k) {
    if (blocks[k].size() < 2) {
      std::ostringstream os;
      os << "cluster " << k << " has fewer than 2 nodes";
      throw StructuralError(os.str());
    }
    for (int v : blocks[k]) {
      if (v < 0 || v >= n) {
        std::ostringstream os;
        os << "cluster " << k << " references node " << v << " outside [0," << n << ")";
        throw StructuralError(os.str());
      }
      if (lab[v] >= 0) {
        std::ostringstream os;
        os << "node " << v << " appears in clusters " << lab[v] << " and " << k;
        throw StructuralError(os.str());
      }
      lab[v] = k;
    }
  }
  for (int v = 0; v < n; ++v)
    if (lab[v] < 0) {
      std::ostringstream os;
      os << "node " << v << " is not covered by the partition";
      throw StructuralError(os.str());
    }
  return lab;
}

void ClusterPartition::validate(const OscillatorNetwork& net) const {
  const int n = net.size();
  labels(n);
  const auto adj = adjacency(net);
  for (int k = 0; k < cluster_count(); ++k) {
    const auto depth = bfs_depth(adj, blocks[k][0], mask_of(n, blocks[k]), nullptr);
    for (int v : blocks[k])
      if (depth[v] < 0) {
        std::ostringstream os;
        os << "cluster " << k << " is disconnected at node " << v;
        throw StructuralError(os.str());
      }
  }
}

InvarianceReport check_invariance(const OscillatorNetwork& net, const ClusterPartition& part,
                                  double tol) {
  part.labels(net.size());
  InvarianceReport rep;
  const double wmax = net.W.maxCoeff();
  const double omax = std::max(1.0, net.omega.cwiseAbs().maxCoeff());
  for (const auto& blk : part.blocks) {
    for (std::size_t a = 0; a < blk.size(); ++a)
      for (std::size_t b = a + 1; b < blk.size(); ++b)
        if (std::abs(net.omega(blk[a]) - net.omega(blk[b])) > tol * omax)
          rep.frequency_violations.emplace_back(blk[a], blk[b]);
  }
  for (int k = 0; k < part.cluster_count(); ++k) {
    const auto& pk = part.blocks[k];
    for (int l = 0; l < part.cluster_count(); ++l) {
      if (l == k) continue;
      std::vector<double> sums;
      for (int i : pk) {
        double s = 0.0;
        for (int q : part.blocks[l]) s += net.W(i, q);
        sums.push_back(s);
      }
      for (std::size_t a = 0; a < pk.size(); ++a)
        for (std::size_t b = a + 1; b < pk.size(); ++b) {
          const double gap = std::abs(sums[a] - sums[b]);
          if (gap > tol * wmax) rep.weight_violations.push_back({pk[a], pk[b], l, gap});
        }
    }
  }
  rep.pass = rep.frequency_violations.empty() && rep.weight_violations.empty();
  return rep;
}

SpanningTree select_spanning_tree(const OscillatorNetwork& net, const ClusterPartition& part,
                                  const TreeOptions& opts) {
  const int n = net.size();
  const auto lab = part.labels(n);
  const auto adj = adjacency(net);
  const int r = part.cluster_count();
  SpanningTree tree;
  tree.intra.resize(r);
  tree.roots.assign(r, -1);

  for (int k = 0; k < r; ++k) {
    std::vector<int> nodes = part.blocks[k];
    std::sort(nodes.begin(), nodes.end());
    const auto allowed = mask_of(n, nodes);
    auto& edges = tree.intra[k];

    if (k < static_cast<int>(opts.intra.size()) && !opts.intra[k].empty()) {
      edges = opts.intra[k];
      if (edges.size() != nodes.size() - 1) {
        std::ostringstream os;
        os << "explicit tree for cluster " << k << " needs " << nodes.size() - 1 << " edges";
        throw StructuralError(os.str());
      }
      // union-find style check that the edges span the block
      std::vector<int> comp(n);
      std::iota(comp.begin(), comp.end(), 0);
      auto find = [&](int v) {
        while (comp[v] != v) v = comp[v] = comp[comp[v]];
        return v;
      };
      for (const Edge& e : edges) {
        if (e.source < 0 || e.source >= n || e.sink < 0 || e.sink >= n || !allowed[e.source] ||
            !allowed[e.sink] || !net.has_link(e.source, e.sink)) {
          std::ostringstream os;
          os << "explicit tree edge (" << e.source << "," << e.sink << ") invalid for cluster " << k;
          throw StructuralError(os.str());
        }
        const int a = find(e.source), b = find(e.sink);
        if (a == b) {
          std::ostringstream os;
          os << "explicit tree for cluster " << k << " contains a cycle";
          throw StructuralError(os.str());
        }
        comp[a] = b;
      }
      std::sort(edges.begin(), edges.end());
      continue;
    }

    int hint = k < static_cast<int>(opts.roots.size()) ? opts.roots[k] : -1;
    if (hint >= 0 && (hint >= n || !allowed[hint])) {
      std::ostringstream os;
      os << "root hint " << hint << " is not in cluster " << k;
      throw StructuralError(os.str());
    }
    int best = -1;
    long best_depth = std::numeric_limits<long>::max();
    for (int root : nodes) {
      const auto depth = bfs_depth(adj, root, allowed, nullptr);
      long total = 0;
      for (int v : nodes) {
        if (depth[v] < 0) {
          std::ostringstream os;
          os << "cluster " << k << " is disconnected at node " << v;
          throw StructuralError(os.str());
        }
        total += depth[v];
      }
      if (total < best_depth) {
        best_depth = total;
        best = root;
      }
    }
    if (hint >= 0) {
      const auto depth = bfs_depth(adj, hint, allowed, nullptr);
      long total = 0;
      for (int v : nodes) total += depth[v];
      if (total == best_depth) best = hint;
    }
    tree.roots[k] = best;
    std::vector<int> parent;
    bfs_depth(adj, best, allowed, &parent);
    for (int v : nodes)
      if (v != best) edges.push_back({parent[v], v});
    std::sort(edges.begin(), edges.end());
  }

  // Clusters joined breadth first from cluster 0 by the smallest crossing edge.
  std::vector<char> reached(r, 0);
  reached[0] = 1;
  for (int step = 1; step < r; ++step) {
    Edge pick{-1, -1};
    for (int a = 0; a < n && pick.source < 0; ++a) {
      if (!reached[lab[a]]) continue;
      for (int b : adj[a])
        if (!reached[lab[b]]) {
          pick = {a, b};
          break;
        }
    }
    if (pick.source < 0) throw StructuralError("clusters are not connected to each other");
    reached[lab[pick.sink]] = 1;
    tree.inter.push_back(pick);
  }
  std::sort(tree.inter.begin(), tree.inter.end());
  return tree;
}

Eigen::MatrixXd IncidenceDecomposition::B_intra_block(int k) const {
  return B.middleCols(intra_offset[k], cluster_edge_count(k));
}

Eigen::MatrixXd IncidenceDecomposition::B_neg_intra_block(int k) const {
  return B_neg.middleCols(intra_offset[k], cluster_edge_count(k));
}

Eigen::MatrixXd IncidenceDecomposition::B_hat_intra_block(int k) const {
  return B_hat.middleCols(tree_offset[k], cluster_tree_count(k));
}

Eigen::VectorXd IncidenceDecomposition::W_intra_block(int k) const {
  return weights.segment(intra_offset[k], cluster_edge_count(k));
}

IncidenceDecomposition build_incidence(const OscillatorNetwork& net, const ClusterPartition& part,
                                       const SpanningTree& tree) {
  IncidenceDecomposition dec;
  dec.n = net.size();
  dec.r = part.cluster_count();
  dec.cluster_of = part.labels(dec.n);
  dec.tree = tree;
  const int n = dec.n;

  // Every linked pair contributes both directions: forward (a < b) columns
  // first, then the reversed columns in the same pair order.
  auto append_pairs = [&](const std::vector<std::pair<int, int>>& pairs) {
    for (auto [a, b] : pairs) dec.edges.push_back({a, b});
    for (auto [a, b] : pairs) dec.edges.push_back({b, a});
  };
  for (int k = 0; k < dec.r; ++k) {
    dec.intra_offset.push_back(static_cast<int>(dec.edges.size()));
    std::vector<int> nodes = part.blocks[k];
    std::sort(nodes.begin(), nodes.end());
    std::vector<std::pair<int, int>> pairs;
    for (std::size_t x = 0; x < nodes.size(); ++x)
      for (std::size_t y = x + 1; y < nodes.size(); ++y)
        if (net.has_link(nodes[x], nodes[y])) pairs.emplace_back(nodes[x], nodes[y]);
    append_pairs(pairs);
  }
  dec.intra_offset.push_back(static_cast<int>(dec.edges.size()));
  dec.intra_count = static_cast<int>(dec.edges.size());
  std::vector<std::pair<int, int>> inter;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (dec.cluster_of[a] != dec.cluster_of[b] && net.has_link(a, b)) inter.emplace_back(a, b);
  append_pairs(inter);

  const int m2 = dec.edge_count();
  dec.B = Eigen::MatrixXd::Zero(n, m2);
  dec.weights.resize(m2);
  for (int c = 0; c < m2; ++c) {
    const Edge& e = dec.edges[c];
    dec.B(e.source, c) = 1.0;
    dec.B(e.sink, c) = -1.0;
    dec.weights(c) = net.W(e.sink, e.source);
  }
  dec.B_neg = dec.B.cwiseMin(0.0);

  for (int k = 0; k < dec.r; ++k) {
    dec.tree_offset.push_back(static_cast<int>(dec.tree_edges.size()));
    dec.tree_edges.insert(dec.tree_edges.end(), tree.intra[k].begin(), tree.intra[k].end());
  }
  dec.tree_offset.push_back(static_cast<int>(dec.tree_edges.size()));
  dec.tree_edges.insert(dec.tree_edges.end(), tree.inter.begin(), tree.inter.end());
  if (static_cast<int>(dec.tree_edges.size()) != n - 1)
    throw StructuralError("spanning tree does not have n - 1 edges");
  dec.B_hat = Eigen::MatrixXd::Zero(n, n - 1);
  for (int c = 0; c < n - 1; ++c) {
    dec.B_hat(dec.tree_edges[c].source, c) = 1.0;
    dec.B_hat(dec.tree_edges[c].sink, c) = -1.0;
  }
  return dec;
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& A, double cutoff, int* rank) {
  if (A.size() == 0) {
    if (rank) *rank = 0;
    return Eigen::MatrixXd::Zero(A.cols(), A.rows());
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double thresh = cutoff * s(0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  int rk = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > thresh) {
      inv(i) = 1.0 / s(i);
      ++rk;
    }
  if (rank) *rank = rk;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

namespace {

Eigen::MatrixXd checked_pinv(const Eigen::MatrixXd& A, int want_rank, const char* label) {
  int rank = 0;
  Eigen::MatrixXd P = pseudo_inverse(A, 1e-12, &rank);
  if (rank < want_rank) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    const auto& s = svd.singularValues();
    std::ostringstream os;
    os << label << " is rank deficient (rank " << rank << " < " << want_rank
       << ", sigma_max " << s(0) << ", sigma_min " << s(s.size() - 1) << ")";
    throw NumericalError(os.str());
  }
  return P;
}

}  // namespace

TransferMatrix transfer_matrix(const IncidenceDecomposition& dec) {
  const int n = dec.n;
  const int nx = dec.x_dim(), ny = dec.y_dim();
  TransferMatrix T;
  T.R1 = Eigen::MatrixXd::Zero(dec.intra_count, nx);
  for (int k = 0; k < dec.r; ++k) {
    const Eigen::MatrixXd Bh = dec.B_hat_intra_block(k);
    Eigen::MatrixXd blk =
        dec.B_intra_block(k).transpose() * checked_pinv(Bh.transpose(), Bh.cols(), "intra tree block");
    T.R1.block(dec.intra_offset[k], dec.tree_offset[k], blk.rows(), blk.cols()) = blk;
    T.R1_blocks.push_back(std::move(blk));
  }

  const Eigen::MatrixXd X = dec.B_hat_intra();
  const Eigen::MatrixXd Y = dec.B_hat_inter();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd P_intra = I - X * pseudo_inverse(X);
  const Eigen::MatrixXd P_inter = ny > 0 ? Eigen::MatrixXd(I - Y * pseudo_inverse(Y)) : I;
  const Eigen::MatrixXd Bi = dec.B_inter();
  T.R2 = Bi.transpose() * checked_pinv(X.transpose() * P_inter, nx, "projected intra tree");
  if (ny > 0)
    T.R3 = Bi.transpose() * checked_pinv(Y.transpose() * P_intra, ny, "projected inter tree");
  else
    T.R3 = Eigen::MatrixXd::Zero(Bi.cols(), 0);

  T.R = Eigen::MatrixXd::Zero(dec.edge_count(), n - 1);
  T.R.topLeftCorner(dec.intra_count, nx) = T.R1;
  T.R.bottomLeftCorner(dec.inter_count(), nx) = T.R2;
  T.R.bottomRightCorner(dec.inter_count(), ny) = T.R3;
  return T;
}

OscillatorNetwork induced_subnetwork(const OscillatorNetwork& net, const std::vector<int>& nodes) {
  const int m = static_cast<int>(nodes.size());
  OscillatorNetwork sub;
  sub.omega.resize(m);
  sub.W.resize(m, m);
  for (int a = 0; a < m; ++a) {
    sub.omega(a) = net.omega(nodes[a]);
    for (int b = 0; b < m; ++b) sub.W(a, b) = net.W(nodes[a], nodes[b]);
  }
  return sub;
}

}  // namespace vibesync
