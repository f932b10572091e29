#include "vibesync/designer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "vibesync/errors.hpp"

namespace vibesync {

ModifiableGraph modifiable_graph(const Eigen::MatrixXd& A) {
  const int m = static_cast<int>(A.rows());
  ModifiableGraph g;
  g.sign = Eigen::MatrixXi::Zero(m, m);
  // Entry (i, j) is edge j -> i; its reverse edge is entry (j, i).
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      if (i == j) continue;
      if (A(j, i) < 0.0) {
        g.sign(i, j) = 1;
        g.increasable.push_back({j, i});
      } else if (A(j, i) > 0.0) {
        g.sign(i, j) = -1;
        g.decreasable.push_back({j, i});
      }
    }
  return g;
}

InfluenceBasis influence_basis(const IncidenceDecomposition& dec, const TransferMatrix& T, int cluster) {
  InfluenceBasis b;
  b.cluster = cluster;
  b.dim = dec.cluster_tree_count(cluster);
  for (int c = dec.intra_offset[cluster]; c < dec.intra_offset[cluster + 1]; ++c) {
    b.columns.push_back(c);
    b.edges.push_back(dec.edges[c]);
    b.vibratable.push_back(dec.weights(c) > 0.0);
    b.M.push_back(influence_matrix(dec, T, c));
  }
  return b;
}

Eigen::MatrixXd reconstruct_influence(const InfluenceBasis& basis, const Eigen::VectorXd& v) {
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(basis.dim, basis.dim);
  for (std::size_t e = 0; e < basis.M.size(); ++e) P += v(static_cast<int>(e)) * basis.M[e];
  return P;
}

namespace {
constexpr double kZero = 1e-12;
}

ReducedBasis reduce_influence(const InfluenceBasis& basis, const ModifiableGraph& mod) {
  ReducedBasis rb;
  rb.basis = basis;
  rb.mod = mod;
  const int m = basis.dim;
  for (std::size_t e = 0; e < basis.M.size(); ++e) {
    Eigen::MatrixXd P1 = basis.M[e];
    std::vector<std::pair<int, int>> support;
    bool diag = false;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        if (i == j) {
          diag = diag || std::abs(P1(i, j)) > kZero;
          continue;
        }
        if (mod.sign(i, j) == 0) P1(i, j) = 0.0;
        else if (std::abs(P1(i, j)) > kZero) support.emplace_back(i, j);
      }
    rb.masked.push_back(P1);
    rb.offdiag_support.push_back(support);
    if (!basis.vibratable[e]) continue;
    if (support.size() == 1) rb.pool.push_back(static_cast<int>(e));
    else if (support.empty() && diag) rb.cancellers.push_back(static_cast<int>(e));
  }
  return rb;
}

namespace {

// Least squares fit of sum c_e vec(M_e) to vec(E_ij); returns residual.
double fit_unit(const ReducedBasis& rb, const std::vector<int>& idx, int row, int col,
                Eigen::VectorXd& coef) {
  const int m = rb.basis.dim;
  Eigen::MatrixXd A(m * m, static_cast<int>(idx.size()));
  for (std::size_t q = 0; q < idx.size(); ++q)
    A.col(static_cast<int>(q)) = Eigen::Map<const Eigen::VectorXd>(rb.basis.M[idx[q]].data(), m * m);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m * m);
  b(col * m + row) = 1.0;
  coef = pseudo_inverse(A) * b;
  return (A * coef - b).cwiseAbs().maxCoeff();
}

bool solve_target(const ReducedBasis& rb, Target& t) {
  std::vector<int> own;
  for (int e : rb.pool)
    if (rb.offdiag_support[e].front() == std::make_pair(t.row, t.col)) own.push_back(e);
  if (own.empty()) return false;
  std::vector<int> cand = own;
  cand.insert(cand.end(), rb.cancellers.begin(), rb.cancellers.end());
  std::sort(cand.begin(), cand.end());
  const int nc = static_cast<int>(cand.size());
  auto accept = [&](const std::vector<int>& idx) {
    if (std::none_of(idx.begin(), idx.end(),
                     [&](int e) { return std::find(own.begin(), own.end(), e) != own.end(); }))
      return false;
    Eigen::VectorXd c;
    if (fit_unit(rb, idx, t.row, t.col, c) >= 1e-10) return false;
    for (int q = 0; q < c.size(); ++q)
      if (std::abs(c(q)) < kZero) return false;
    t.recipe.clear();
    for (std::size_t q = 0; q < idx.size(); ++q) t.recipe.emplace_back(idx[q], c(static_cast<int>(q)));
    return true;
  };
  for (int a = 0; a < nc; ++a)
    if (accept({cand[a]})) return true;
  for (int a = 0; a < nc; ++a)
    for (int b = a + 1; b < nc; ++b)
      if (accept({cand[a], cand[b]})) return true;
  for (int a = 0; a < nc; ++a)
    for (int b = a + 1; b < nc; ++b)
      for (int c = b + 1; c < nc; ++c)
        if (accept({cand[a], cand[b], cand[c]})) return true;
  Eigen::VectorXd coef;
  if (fit_unit(rb, cand, t.row, t.col, coef) >= 1e-10) return false;
  t.recipe.clear();
  for (int q = 0; q < nc; ++q)
    if (std::abs(coef(q)) >= kZero) t.recipe.emplace_back(cand[q], coef(q));
  return !t.recipe.empty();
}

bool chain_free(const std::vector<std::pair<int, int>>& entries) {
  for (const auto& a : entries)
    for (const auto& b : entries)
      if (a.second == b.first) return false;
  return true;
}

}  // namespace

bool support_is_acyclic(int dim, const std::vector<std::pair<int, int>>& entries) {
  // Entry (i, j) is the edge j -> i; Kahn's algorithm.
  std::vector<std::vector<int>> out(dim);
  std::vector<int> indeg(dim, 0);
  for (auto [i, j] : entries) {
    if (i == j) return false;
    out[j].push_back(i);
    ++indeg[i];
  }
  std::vector<int> ready;
  for (int v = 0; v < dim; ++v)
    if (indeg[v] == 0) ready.push_back(v);
  int seen = 0;
  while (!ready.empty()) {
    const int v = ready.back();
    ready.pop_back();
    ++seen;
    for (int w : out[v])
      if (--indeg[w] == 0) ready.push_back(w);
  }
  return seen == dim;
}

std::vector<RealizablePattern> realizable_patterns(const ReducedBasis& rb, PatternPolicy policy) {
  const int m = rb.basis.dim;
  std::vector<Target> feasible;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      if (i == j || rb.mod.sign(i, j) == 0) continue;
      Target t{i, j, rb.mod.sign(i, j), {}};
      if (solve_target(rb, t)) feasible.push_back(t);
    }
  auto compatible = [&](const std::vector<std::pair<int, int>>& entries) {
    return policy == PatternPolicy::chain_free ? chain_free(entries) : support_is_acyclic(m, entries);
  };

  std::vector<RealizablePattern> out;
  std::set<std::vector<int>> seen;
  for (std::size_t s = 0; s < feasible.size(); ++s) {
    std::vector<int> chosen{static_cast<int>(s)};
    std::vector<std::pair<int, int>> entries{{feasible[s].row, feasible[s].col}};
    if (!compatible(entries)) continue;
    for (std::size_t q = 0; q < feasible.size(); ++q) {
      if (q == s) continue;
      entries.emplace_back(feasible[q].row, feasible[q].col);
      if (compatible(entries)) chosen.push_back(static_cast<int>(q));
      else entries.pop_back();
    }
    std::sort(chosen.begin(), chosen.end());
    if (!seen.insert(chosen).second) continue;
    RealizablePattern p;
    for (int q : chosen) p.targets.push_back(feasible[q]);
    std::vector<std::pair<int, int>> final_entries;
    for (const auto& t : p.targets) final_entries.emplace_back(t.row, t.col);
    p.chain_free = chain_free(final_entries);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<double> default_magnitude_grid(const Eigen::MatrixXd& J) {
  const double norm = J.cwiseAbs().rowwise().sum().maxCoeff();
  std::vector<double> g;
  for (int k = 0; k <= 10; ++k) g.push_back(0.01 * k * norm);
  return g;
}

DeltaDesign design_delta(const Eigen::MatrixXd& J, const RealizablePattern& pattern,
                         const std::vector<double>& magnitudes) {
  if (!is_hurwitz(J)) throw DesignError("design_delta requires a Hurwitz base matrix");
  DeltaDesign d;
  d.delta = Eigen::MatrixXd::Zero(J.rows(), J.cols());
  d.robustness_before = robustness(J);
  d.robustness_after = d.robustness_before;
  const int nt = static_cast<int>(pattern.targets.size());
  if (nt == 0 || magnitudes.empty()) return d;

  const int ng = static_cast<int>(magnitudes.size());
  std::vector<int> level(nt, 0);
  double best_r = d.robustness_before;
  double best_l1 = 0.0;
  auto build = [&](const std::vector<int>& lv) {
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(J.rows(), J.cols());
    for (int q = 0; q < nt; ++q) {
      const auto& t = pattern.targets[q];
      D(t.row, t.col) = t.sign * magnitudes[lv[q]];
    }
    return D;
  };
  // Returns true when lv beats the incumbent.
  auto consider = [&](const std::vector<int>& lv) {
    const Eigen::MatrixXd D = build(lv);
    const Eigen::MatrixXd A = J + D;
    if (!is_hurwitz(A)) return false;
    const double r = robustness(A);
    const double l1 = D.cwiseAbs().sum();
    const double tol = 1e-12 * std::max(1.0, std::abs(best_r));
    if (r > best_r + tol || (std::abs(r - best_r) <= tol && l1 < best_l1)) {
      best_r = r;
      best_l1 = l1;
      d.delta = D;
      return true;
    }
    return false;
  };

  double combos = std::pow(static_cast<double>(ng), nt);
  if (combos <= 4096.0) {
    d.exhaustive = true;
    std::vector<int> lv(nt, 0);
    for (long c = 0; c < static_cast<long>(combos); ++c) {
      long x = c;
      for (int q = 0; q < nt; ++q) {
        lv[q] = static_cast<int>(x % ng);
        x /= ng;
      }
      consider(lv);
    }
  } else {
    bool changed = true;
    for (int sweep = 0; sweep < 100 && changed; ++sweep) {
      changed = false;
      for (int q = 0; q < nt; ++q) {
        std::vector<int> lv = level;
        for (int g = 0; g < ng; ++g) {
          lv[q] = g;
          if (consider(lv)) {
            level = lv;
            changed = true;
          }
        }
      }
    }
  }
  d.robustness_after = best_r;
  d.improved = best_r > d.robustness_before;
  return d;
}

double prime_root(int k) {
  std::vector<int> primes;
  for (int c = 2; static_cast<int>(primes.size()) <= k; ++c) {
    bool prime = true;
    for (int p : primes)
      if (c % p == 0) {
        prime = false;
        break;
      }
    if (prime) primes.push_back(c);
  }
  return std::sqrt(static_cast<double>(primes[k]));
}

VibrationSchedule synthesize_schedule(const Eigen::MatrixXd& delta, const RealizablePattern& pattern,
                                      const Eigen::MatrixXd& J, const InfluenceBasis& basis,
                                      double epsilon, int first_prime) {
  VibrationSchedule s;
  s.epsilon = epsilon;
  Eigen::MatrixXd covered = Eigen::MatrixXd::Zero(delta.rows(), delta.cols());
  int group = 0;
  for (const auto& t : pattern.targets) {
    covered(t.row, t.col) = 1.0;
    const double d = delta(t.row, t.col);
    if (d == 0.0) continue;
    const double a_rev = J(t.col, t.row);
    if ((d > 0.0 ? 1 : -1) != t.sign || a_rev == 0.0 || (d > 0.0) == (a_rev > 0.0)) {
      std::ostringstream os;
      os << "entry (" << t.row << "," << t.col << ") cannot move by " << d
         << " against reverse entry " << a_rev;
      throw DesignError(os.str());
    }
    const double beta = prime_root(first_prime + group++);
    const double u = amplitude_for_shift(d, a_rev, beta);
    for (auto [e, c] : t.recipe)
      s.entries.push_back(signed_entry(basis.edges[e], u * c, beta, std::numbers::pi / 2.0));
  }
  for (int i = 0; i < delta.rows(); ++i)
    for (int j = 0; j < delta.cols(); ++j)
      if (delta(i, j) != 0.0 && covered(i, j) == 0.0) {
        std::ostringstream os;
        os << "entry (" << i << "," << j << ") of delta lies outside the pattern";
        throw DesignError(os.str());
      }
  return s;
}

Eigen::VectorXd theta_near_manifold(const ClusterPartition& part, int n, double spread,
                                    unsigned long seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::VectorXd base(n), dev(n);
  for (const auto& blk : part.blocks) {
    const double c = phase(rng);
    for (int v : blk) base(v) = c;
  }
  for (int v = 0; v < n; ++v) dev(v) = unit(rng);
  const double d = manifold_distance(dev, part);
  if (d > 0.0) dev *= spread / d;
  return base + dev;
}

DesignResult end_to_end_design(const OscillatorNetwork& net, const ClusterPartition& part,
                               const DesignOptions& opts) {
  net.validate();
  part.validate(net);
  if (!check_invariance(net, part, opts.certify.invariance_tol).pass)
    throw ConfigError("network does not satisfy the invariance condition for the partition");

  DesignResult res;
  res.schedule.epsilon = opts.epsilon;
  const auto base = certify(net, part, nullptr, opts.certify);
  if (!base.verdict) {
    const auto tree = select_spanning_tree(net, part, opts.certify.tree);
    const auto dec = build_incidence(net, part, tree);
    const auto js = cluster_jacobians(dec);
    const int r = dec.r;
    res.clusters.resize(r);
    std::vector<InfluenceBasis> bases(r);
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < r; ++k) {
      auto& cd = res.clusters[k];
      cd.cluster = k;
      cd.J = js.blocks[k];
      cd.mod = modifiable_graph(cd.J);
      bases[k] = influence_basis(dec, js.transfer, k);
      cd.delta.delta = Eigen::MatrixXd::Zero(cd.J.rows(), cd.J.cols());
      if (cd.J.rows() < 2 || !is_hurwitz(cd.J)) continue;
      cd.delta.robustness_before = cd.delta.robustness_after = robustness(cd.J);
      cd.patterns = realizable_patterns(reduce_influence(bases[k], cd.mod), opts.policy);
      for (std::size_t p = 0; p < cd.patterns.size(); ++p) {
        auto dd = design_delta(cd.J, cd.patterns[p], default_magnitude_grid(cd.J));
        if (dd.improved && (cd.chosen < 0 || dd.robustness_after > cd.delta.robustness_after)) {
          cd.chosen = static_cast<int>(p);
          cd.delta = dd;
        }
      }
    }
    int prime = 0;
    for (int k = 0; k < r; ++k) {
      const auto& cd = res.clusters[k];
      if (cd.chosen < 0) continue;
      auto part_sched = synthesize_schedule(cd.delta.delta, cd.patterns[cd.chosen], cd.J, bases[k],
                                            opts.epsilon, prime);
      for (const auto& t : cd.patterns[cd.chosen].targets)
        if (cd.delta.delta(t.row, t.col) != 0.0) ++prime;
      res.schedule.entries.insert(res.schedule.entries.end(), part_sched.entries.begin(),
                                  part_sched.entries.end());
    }
    res.certificate = certify(net, part, &res.schedule, opts.certify);
  } else {
    res.certificate = base;
  }

  if (opts.simulate) {
    const Eigen::VectorXd th0 = theta_near_manifold(part, net.size(), opts.spread, opts.seed);
    SimulationOptions so;
    so.t_span = opts.t_span;
    so.record_stride = 0;
    const double h = auto_step(opts.t_span, res.schedule.empty() ? nullptr : &res.schedule);
    so.record_stride = std::max(1, static_cast<int>(std::ceil(opts.t_span / h / 5000.0)));
    const auto traj = simulate(net, part, &res.schedule, th0, so);
    res.simulated = true;
    res.verdict = classify_stability(traj, std::min(opts.window, opts.t_span / 2.5));
    res.initial_distance = traj.dist.front();
    res.final_distance = traj.dist.back();
  }
  return res;
}

}  // namespace vibesync
