#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <set>

#include "test_util.hpp"
#include "vibesync/designer.hpp"
#include "vibesync/errors.hpp"
#include "vibesync/example.hpp"
#include "vibesync/stability.hpp"

using namespace vibesync;

namespace {

struct ClusterSetup {
  OscillatorNetwork net;
  ClusterPartition part;
  IncidenceDecomposition dec;
  JacobianSet js;
};

ClusterSetup setup(const OscillatorNetwork& net, const ClusterPartition& part, const TreeOptions& opts = {}) {
  ClusterSetup s{net, part, {}, {}};
  s.dec = build_incidence(net, part, select_spanning_tree(net, part, opts));
  s.js = cluster_jacobians(s.dec);
  return s;
}

OscillatorNetwork star(int leaves) {
  OscillatorNetwork net;
  net.omega = Eigen::VectorXd::Zero(leaves + 1);
  net.W = Eigen::MatrixXd::Zero(leaves + 1, leaves + 1);
  for (int v = 1; v <= leaves; ++v) net.W(v, 0) = net.W(0, v) = 1.0;
  return net;
}

ClusterPartition one_block(int n) {
  ClusterPartition p;
  p.blocks.emplace_back(n);
  for (int v = 0; v < n; ++v) p.blocks[0][v] = v;
  return p;
}

// DFS colouring; independent of the library's Kahn check.
bool has_cycle(int dim, const std::vector<std::pair<int, int>>& entries) {
  std::vector<std::vector<int>> out(dim);
  for (auto [i, j] : entries) {
    if (i == j) return true;
    out[j].push_back(i);
  }
  std::vector<int> colour(dim, 0);
  std::function<bool(int)> visit = [&](int v) {
    colour[v] = 1;
    for (int w : out[v]) {
      if (colour[w] == 1) return true;
      if (colour[w] == 0 && visit(w)) return true;
    }
    colour[v] = 2;
    return false;
  };
  for (int v = 0; v < dim; ++v)
    if (colour[v] == 0 && visit(v)) return true;
  return false;
}

std::vector<std::pair<int, int>> support_of(const RealizablePattern& p) {
  std::vector<std::pair<int, int>> out;
  for (const auto& t : p.targets) out.emplace_back(t.row, t.col);
  return out;
}

double brute_force_best(const Eigen::MatrixXd& J, const RealizablePattern& p, const std::vector<double>& grid) {
  const int nt = static_cast<int>(p.targets.size());
  double best = robustness(J);
  std::vector<int> lv(nt, 0);
  std::function<void(int)> rec = [&](int q) {
    if (q == nt) {
      Eigen::MatrixXd A = J;
      for (int a = 0; a < nt; ++a) A(p.targets[a].row, p.targets[a].col) += p.targets[a].sign * grid[lv[a]];
      if (A.eigenvalues().real().maxCoeff() < -1e-9) best = std::max(best, robustness(A));
      return;
    }
    for (std::size_t g = 0; g < grid.size(); ++g) {
      lv[q] = static_cast<int>(g);
      rec(q + 1);
    }
  };
  rec(0);
  return best;
}

}  // namespace

TEST(ModifiableGraph, TwoByTwoExample) {
  Eigen::MatrixXd A(2, 2);
  A << -1, -2, 3, -1;
  const auto g = modifiable_graph(A);
  // Entry (1, 0) sees reverse entry A(0, 1) = -2: increasable edge 0 -> 1.
  ASSERT_EQ(g.increasable.size(), 1u);
  EXPECT_EQ(g.increasable[0], (Edge{0, 1}));
  ASSERT_EQ(g.decreasable.size(), 1u);
  EXPECT_EQ(g.decreasable[0], (Edge{1, 0}));
  EXPECT_EQ(g.sign(1, 0), 1);
  EXPECT_EQ(g.sign(0, 1), -1);
}

TEST(ModifiableGraph, ZeroReverseEntryIsNeither) {
  Eigen::MatrixXd A(2, 2);
  A << -1, 0, 3, -1;
  const auto g = modifiable_graph(A);
  EXPECT_TRUE(g.increasable.empty());
  EXPECT_EQ(g.sign(1, 0), 0);
  EXPECT_EQ(g.sign(0, 1), -1);
}

TEST(ModifiableGraph, SignsFollowReverseEntriesOnRandomMatrices) {
  std::mt19937_64 rng(3);
  for (int it = 0; it < 50; ++it) {
    const int m = testutil::uniform_int(rng, 2, 6);
    Eigen::MatrixXd A(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) A(i, j) = testutil::uniform_int(rng, -2, 2);
    const auto g = modifiable_graph(A);
    std::set<Edge> inc(g.increasable.begin(), g.increasable.end());
    std::set<Edge> dec(g.decreasable.begin(), g.decreasable.end());
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        if (i == j) {
          EXPECT_EQ(g.sign(i, j), 0);
          continue;
        }
        const Edge e{j, i};
        EXPECT_EQ(inc.count(e), A(j, i) < 0 ? 1u : 0u);
        EXPECT_EQ(dec.count(e), A(j, i) > 0 ? 1u : 0u);
      }
  }
}

TEST(InfluenceBasis, StarClusterByHand) {
  // Hub 0, tree 0 -> 1, 0 -> 2, so x = (theta0 - theta1, theta0 - theta2).
  const auto s = setup(star(2), one_block(3));
  const auto b = influence_basis(s.dec, s.js.transfer, 0);
  ASSERT_EQ(b.dim, 2);
  std::map<Edge, Eigen::MatrixXd> expect;
  expect[{0, 1}] = (Eigen::MatrixXd(2, 2) << -1, 0, 0, 0).finished();
  expect[{1, 0}] = (Eigen::MatrixXd(2, 2) << -1, 0, -1, 0).finished();
  expect[{0, 2}] = (Eigen::MatrixXd(2, 2) << 0, 0, 0, -1).finished();
  expect[{2, 0}] = (Eigen::MatrixXd(2, 2) << 0, -1, 0, -1).finished();
  ASSERT_EQ(b.edges.size(), 4u);
  for (std::size_t e = 0; e < b.edges.size(); ++e) {
    ASSERT_TRUE(expect.count(b.edges[e]));
    EXPECT_LE((b.M[e] - expect[b.edges[e]]).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(InfluenceBasis, ReconstructionMatchesDirectProduct) {
  std::mt19937_64 rng(11);
  for (int it = 0; it < 30; ++it) {
    auto [net, part] = testutil::random_clustered(rng, testutil::uniform_int(rng, 1, 3), 2, 6);
    const auto s = setup(net, part);
    for (int k = 0; k < s.dec.r; ++k) {
      const auto b = influence_basis(s.dec, s.js.transfer, k);
      const int ne = static_cast<int>(b.M.size());
      Eigen::VectorXd v(ne);
      for (int e = 0; e < ne; ++e) v(e) = testutil::uniform(rng, -3.0, 3.0);
      const Eigen::MatrixXd direct = -s.dec.B_hat_intra_block(k).transpose() * s.dec.B_neg_intra_block(k) *
                                     v.asDiagonal() * s.js.transfer.R1_blocks[k];
      EXPECT_LE((reconstruct_influence(b, v) - direct).cwiseAbs().maxCoeff(), 1e-12);
      // Weights as signals give back the cluster Jacobian.
      const Eigen::MatrixXd Jr = reconstruct_influence(b, s.dec.W_intra_block(k));
      EXPECT_LE((Jr - s.js.blocks[k]).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(ReduceInfluence, EmptyModifiableGraphGivesEmptyPool) {
  const auto s = setup(star(3), one_block(4));
  const auto b = influence_basis(s.dec, s.js.transfer, 0);
  ModifiableGraph none;
  none.sign = Eigen::MatrixXi::Zero(b.dim, b.dim);
  const auto rb = reduce_influence(b, none);
  EXPECT_TRUE(rb.pool.empty());
  EXPECT_TRUE(realizable_patterns(rb).empty());
}

TEST(ReduceInfluence, EdgeTouchingTwoModifiableEntriesIsDropped) {
  // Star with three leaves: edge 1 -> 0 feeds column 0 of every row.
  const auto s = setup(star(3), one_block(4));
  const auto b = influence_basis(s.dec, s.js.transfer, 0);
  const auto idx = std::find(b.edges.begin(), b.edges.end(), Edge{1, 0}) - b.edges.begin();
  ASSERT_LT(idx, static_cast<long>(b.edges.size()));

  ModifiableGraph one, two;
  one.sign = two.sign = Eigen::MatrixXi::Zero(3, 3);
  one.sign(1, 0) = 1;
  two.sign(1, 0) = 1;
  two.sign(2, 0) = -1;
  for (const auto* g : {&one, &two}) {
    const auto rb = reduce_influence(b, *g);
    for (std::size_t e = 0; e < b.M.size(); ++e) {
      int count = 0;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          if (i != j && g->sign(i, j) != 0 && std::abs(b.M[e](i, j)) > 1e-12) ++count;
      const bool pooled = std::count(rb.pool.begin(), rb.pool.end(), static_cast<int>(e)) > 0;
      EXPECT_EQ(pooled, count == 1) << "edge index " << e;
    }
  }
  const auto rb2 = reduce_influence(b, two);
  EXPECT_EQ(std::count(rb2.pool.begin(), rb2.pool.end(), static_cast<int>(idx)), 0);
  const auto rb1 = reduce_influence(b, one);
  EXPECT_EQ(std::count(rb1.pool.begin(), rb1.pool.end(), static_cast<int>(idx)), 1);
}

TEST(RealizablePatterns, BidirectedPairHasNone) {
  const auto s = setup(star(1), one_block(2));
  const auto b = influence_basis(s.dec, s.js.transfer, 0);
  ASSERT_EQ(b.dim, 1);
  const auto rb = reduce_influence(b, modifiable_graph(s.js.blocks[0]));
  EXPECT_TRUE(realizable_patterns(rb, PatternPolicy::dag).empty());
}

TEST(RealizablePatterns, RecipesIsolateTargetsAndSupportsAreAcyclic) {
  std::mt19937_64 rng(5);
  int patterns = 0;
  for (int it = 0; it < 40; ++it) {
    auto [net, part] = testutil::random_clustered(rng, 2, 3, 5, 0.5, 0.6);
    const auto s = setup(net, part);
    for (int k = 0; k < s.dec.r; ++k) {
      const auto b = influence_basis(s.dec, s.js.transfer, k);
      const auto rb = reduce_influence(b, modifiable_graph(s.js.blocks[k]));
      for (auto pol : {PatternPolicy::chain_free, PatternPolicy::dag}) {
        for (const auto& p : realizable_patterns(rb, pol)) {
          ++patterns;
          const auto sup = support_of(p);
          EXPECT_FALSE(has_cycle(b.dim, sup));
          EXPECT_EQ(support_is_acyclic(b.dim, sup), !has_cycle(b.dim, sup));
          if (pol == PatternPolicy::chain_free) EXPECT_TRUE(p.chain_free);
          for (const auto& t : p.targets) {
            EXPECT_EQ(t.sign, s.js.blocks[k](t.col, t.row) < 0 ? 1 : -1);
            Eigen::MatrixXd P = Eigen::MatrixXd::Zero(b.dim, b.dim);
            for (auto [e, c] : t.recipe) {
              EXPECT_TRUE(b.vibratable[e]);
              P += c * b.M[e];
            }
            Eigen::MatrixXd E = Eigen::MatrixXd::Zero(b.dim, b.dim);
            E(t.row, t.col) = 1.0;
            EXPECT_LE((P - E).cwiseAbs().maxCoeff(), 1e-9);
          }
        }
      }
    }
  }
  EXPECT_GT(patterns, 10);
}

TEST(RealizablePatterns, EnumerationIsDeterministic) {
  std::mt19937_64 rng(8);
  auto [net, part] = testutil::random_clustered(rng, 1, 5, 5, 0.5, 0.7);
  const auto s = setup(net, part);
  const auto b = influence_basis(s.dec, s.js.transfer, 0);
  const auto rb = reduce_influence(b, modifiable_graph(s.js.blocks[0]));
  const auto a = realizable_patterns(rb, PatternPolicy::dag);
  const auto c = realizable_patterns(rb, PatternPolicy::dag);
  ASSERT_EQ(a.size(), c.size());
  for (std::size_t p = 0; p < a.size(); ++p) EXPECT_EQ(support_of(a[p]), support_of(c[p]));
}

TEST(RealizablePatterns, ExampleClusterYieldsPublishedGroups) {
  const auto cfg = packaged_example_config();
  const auto s = setup(cfg.net, cfg.part, cfg.tree);
  const auto b = influence_basis(s.dec, s.js.transfer, 0);
  const auto rb = reduce_influence(b, modifiable_graph(s.js.blocks[0]));
  const auto groups = example_groups(cfg);
  bool found = false;
  for (const auto& p : realizable_patterns(rb, PatternPolicy::dag)) {
    if (support_of(p) != std::vector<std::pair<int, int>>{{0, 1}, {2, 0}}) continue;
    found = true;
    EXPECT_FALSE(p.chain_free);
    EXPECT_EQ(p.targets[0].sign, 1);
    EXPECT_EQ(p.targets[1].sign, -1);
    for (std::size_t g = 0; g < 2; ++g) {
      // Recipe edges and coefficient ratios match the packaged groups.
      const auto& t = p.targets[g];
      ASSERT_EQ(t.recipe.size(), groups[g].edges.size());
      const double scale = t.recipe[0].second / groups[g].edges[0].second;
      for (std::size_t q = 0; q < t.recipe.size(); ++q) {
        EXPECT_EQ(b.edges[t.recipe[q].first], groups[g].edges[q].first);
        EXPECT_NEAR(t.recipe[q].second, scale * groups[g].edges[q].second, 1e-9);
      }
    }
    // The published shift is admissible for this pattern.
    const Eigen::MatrixXd J1 = 0.05 * (Eigen::MatrixXd(3, 3) << -8, 0, 2, -1, -4, -1, 1, -1, -5).finished();
    const Eigen::MatrixXd D1 = 0.05 * (Eigen::MatrixXd(3, 3) << 0, 1, 0, 0, 0, 0, -1, 0, 0).finished();
    for (const auto& t : p.targets) EXPECT_GT(t.sign * D1(t.row, t.col), 0.0);
    EXPECT_TRUE(is_hurwitz(J1 + D1));
    EXPECT_GT(robustness(J1 + D1), robustness(J1));
  }
  EXPECT_TRUE(found);
}

TEST(DesignDelta, EmptyPatternIsZero) {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd J = testutil::random_hurwitz(rng, 3);
  const auto d = design_delta(J, RealizablePattern{}, default_magnitude_grid(J));
  EXPECT_EQ(d.delta.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_FALSE(d.improved);
  EXPECT_DOUBLE_EQ(d.robustness_after, robustness(J));
}

TEST(DesignDelta, RequiresHurwitzBase) {
  const Eigen::MatrixXd J = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_THROW(design_delta(J, RealizablePattern{}, {0.0}), DesignError);
}

TEST(DesignDelta, GridMatchesExhaustiveOracle) {
  std::mt19937_64 rng(21);
  for (int it = 0; it < 15; ++it) {
    const int m = testutil::uniform_int(rng, 3, 5);
    const Eigen::MatrixXd J = testutil::random_hurwitz(rng, m);
    const auto entries = testutil::random_dag_entries(rng, m, 2, true);
    const auto p = testutil::elementary_pattern(J, entries);
    const auto grid = default_magnitude_grid(J);
    ASSERT_EQ(grid.size(), 11u);
    EXPECT_NEAR(grid.back(), 0.1 * testutil::inf_norm(J), 1e-12);
    const auto d = design_delta(J, p, grid);
    EXPECT_TRUE(d.exhaustive);
    EXPECT_NEAR(d.robustness_after, brute_force_best(J, p, grid), 1e-10);
    EXPECT_NEAR(robustness(J + d.delta), d.robustness_after, 1e-10);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        const auto it2 = std::find(entries.begin(), entries.end(), std::make_pair(i, j));
        if (it2 == entries.end()) EXPECT_EQ(d.delta(i, j), 0.0);
        else EXPECT_GE(d.delta(i, j) * p.targets[it2 - entries.begin()].sign, 0.0);
      }
  }
}

TEST(DesignDelta, CoordinateAscentNeverLosesRobustness) {
  std::mt19937_64 rng(4);
  for (int it = 0; it < 5; ++it) {
    const Eigen::MatrixXd J = testutil::random_hurwitz(rng, 6);
    const auto p = testutil::elementary_pattern(J, testutil::random_dag_entries(rng, 6, 4, false));
    ASSERT_EQ(p.targets.size(), 4u);
    const auto d = design_delta(J, p, default_magnitude_grid(J));
    EXPECT_FALSE(d.exhaustive);
    EXPECT_GE(d.robustness_after, d.robustness_before);
    EXPECT_TRUE(is_hurwitz(J + d.delta));
    EXPECT_EQ(d.improved, d.robustness_after > d.robustness_before);
  }
}

TEST(SynthesizeSchedule, ZeroDeltaGivesEmptySchedule) {
  std::mt19937_64 rng(6);
  const Eigen::MatrixXd J = testutil::random_hurwitz(rng, 3);
  const auto entries = testutil::random_dag_entries(rng, 3, 1, true);
  const auto s = synthesize_schedule(Eigen::MatrixXd::Zero(3, 3), testutil::elementary_pattern(J, entries), J,
                                     testutil::elementary_basis(3, entries), 0.01);
  EXPECT_TRUE(s.empty());
}

TEST(SynthesizeSchedule, WrongSignIsDesignErrorNamingEntry) {
  Eigen::MatrixXd J(2, 2);
  J << -1, 0.5, -0.5, -1;
  const std::vector<std::pair<int, int>> entries{{1, 0}};
  auto p = testutil::elementary_pattern(J, entries);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(2, 2);
  D(1, 0) = 0.1;  // reverse entry J(0, 1) = 0.5 > 0 only allows a decrease
  try {
    synthesize_schedule(D, p, J, testutil::elementary_basis(2, entries), 0.01);
    FAIL() << "expected DesignError";
  } catch (const DesignError& e) {
    EXPECT_NE(std::string(e.what()).find("(1,0)"), std::string::npos);
  }
}

TEST(SynthesizeSchedule, FrequenciesAreDistinctPrimeRoots) {
  EXPECT_DOUBLE_EQ(prime_root(0), std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(prime_root(1), std::sqrt(3.0));
  EXPECT_DOUBLE_EQ(prime_root(4), std::sqrt(11.0));
  std::mt19937_64 rng(12);
  const Eigen::MatrixXd J = testutil::random_hurwitz(rng, 6);
  const auto entries = testutil::random_dag_entries(rng, 6, 3, true);
  const auto p = testutil::elementary_pattern(J, entries);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(6, 6);
  for (const auto& t : p.targets) D(t.row, t.col) = 0.1 * t.sign;
  const auto s = synthesize_schedule(D, p, J, testutil::elementary_basis(6, entries), 0.01);
  std::set<long> squares;
  for (const auto& e : s.entries) squares.insert(std::lround(e.frequency * e.frequency));
  EXPECT_EQ(squares, (std::set<long>{2, 3, 5}));
}

TEST(SynthesizeSchedule, AveragingRoundTripOnElementaryBasis) {
  std::mt19937_64 rng(17);
  for (int it = 0; it < 8; ++it) {
    const int m = testutil::uniform_int(rng, 3, 6);
    const Eigen::MatrixXd J = testutil::random_hurwitz(rng, m);
    const auto entries = testutil::random_dag_entries(rng, m, 2, true);
    const auto p = testutil::elementary_pattern(J, entries);
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(m, m);
    for (const auto& t : p.targets)
      D(t.row, t.col) = t.sign * testutil::uniform(rng, 0.05, 0.3) * std::abs(J(t.col, t.row));
    const auto b = testutil::elementary_basis(m, entries);
    const auto s = synthesize_schedule(D, p, J, b, 0.01);
    const auto avg = averaged_matrix(J, testutil::periodic_from_schedule(b, s));
    EXPECT_LE(testutil::inf_norm(avg.J_bar - (J + D)), 0.02 * testutil::inf_norm(D));
  }
}

TEST(SynthesizeSchedule, AveragingRoundTripOnNetworkDesigns) {
  std::mt19937_64 rng(31);
  int checked = 0;
  for (int it = 0; it < 60 && checked < 5; ++it) {
    auto [net, part] = testutil::random_clustered(rng, 1, 4, 5, 0.5, 0.6);
    const auto s = setup(net, part);
    const Eigen::MatrixXd& J = s.js.blocks[0];
    const auto b = influence_basis(s.dec, s.js.transfer, 0);
    const auto pats = realizable_patterns(reduce_influence(b, modifiable_graph(J)));
    for (const auto& p : pats) {
      const auto d = design_delta(J, p, default_magnitude_grid(J));
      if (!d.improved) continue;
      const auto sched = synthesize_schedule(d.delta, p, J, b, 0.01);
      const auto terms = cluster_periodic_terms(s.dec, s.js.transfer, &sched);
      const auto avg = averaged_matrix(J, terms[0]);
      EXPECT_LE(testutil::inf_norm(avg.J_bar - (J + d.delta)), 0.02 * testutil::inf_norm(d.delta));
      // Frequencies per target group are distinct.
      std::set<double> freqs;
      for (const auto& e : sched.entries) freqs.insert(e.frequency);
      int groups = 0;
      for (const auto& t : p.targets) groups += d.delta(t.row, t.col) != 0.0;
      EXPECT_EQ(static_cast<int>(freqs.size()), groups);
      ++checked;
      break;
    }
  }
  EXPECT_GE(checked, 3);
}

TEST(SynthesizeSchedule, ChainedTargetsBreakTheEntrywiseShift) {
  // Targets (0,1) and (2,0) form the path 1 -> 0 -> 2. The chain term of the
  // transition matrix has nonzero mean, so the shift formula no longer holds
  // entrywise; this is why chain-free patterns are the default.
  const Eigen::MatrixXd J = 0.05 * (Eigen::MatrixXd(3, 3) << -8, 0, 2, -1, -4, -1, 1, -1, -5).finished();
  const Eigen::MatrixXd D = 0.05 * (Eigen::MatrixXd(3, 3) << 0, 1, 0, 0, 0, 0, -1, 0, 0).finished();
  const std::vector<std::pair<int, int>> entries{{0, 1}, {2, 0}};
  const auto p = testutil::elementary_pattern(J, entries);
  const auto b = testutil::elementary_basis(3, entries);
  const auto s = synthesize_schedule(D, p, J, b, 0.01);
  const auto avg = averaged_matrix(J, testutil::periodic_from_schedule(b, s));
  EXPECT_GT(testutil::inf_norm(avg.J_bar - (J + D)), 0.02 * testutil::inf_norm(D));
  // Either target alone round-trips.
  for (const auto& e : entries) {
    Eigen::MatrixXd Dq = Eigen::MatrixXd::Zero(3, 3);
    Dq(e.first, e.second) = D(e.first, e.second);
    const auto pq = testutil::elementary_pattern(J, {e});
    const auto bq = testutil::elementary_basis(3, {e});
    const auto sq = synthesize_schedule(Dq, pq, J, bq, 0.01);
    const auto aq = averaged_matrix(J, testutil::periodic_from_schedule(bq, sq));
    EXPECT_LE(testutil::inf_norm(aq.J_bar - (J + Dq)), 0.02 * testutil::inf_norm(Dq));
  }
}

TEST(EndToEndDesign, CertifiedNetworkGetsEmptySchedule) {
  // Two complete triangles with a tiny uniform link.
  OscillatorNetwork net;
  net.omega = (Eigen::VectorXd(6) << 1, 1, 1, 3, 3, 3).finished();
  net.W = Eigen::MatrixXd::Zero(6, 6);
  for (int base : {0, 3})
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (i != j) net.W(base + i, base + j) = 1.0;
  for (int i = 0; i < 3; ++i) {
    net.W(i, 3) = 1e-6;
    net.W(3 + i, 0) = 1e-6;
  }
  ClusterPartition part;
  part.blocks = {{0, 1, 2}, {3, 4, 5}};
  DesignOptions opts;
  opts.simulate = false;
  const auto res = end_to_end_design(net, part, opts);
  EXPECT_TRUE(res.certificate.verdict);
  EXPECT_TRUE(res.schedule.empty());
}

TEST(EndToEndDesign, RobustnessNeverDecreases) {
  std::mt19937_64 rng(41);
  int improved = 0;
  for (int it = 0; it < 10; ++it) {
    auto [net, part] = testutil::random_clustered(rng, 2, 3, 5, 2.0, 0.6);
    DesignOptions opts;
    opts.simulate = false;
    const auto res = end_to_end_design(net, part, opts);
    for (const auto& cd : res.clusters) {
      if (!is_hurwitz(cd.J)) continue;
      const double after = robustness(cd.J + cd.delta.delta);
      EXPECT_GE(after, robustness(cd.J) - 1e-12);
      EXPECT_NEAR(after, cd.delta.robustness_after, 1e-10);
      improved += cd.chosen >= 0;
    }
    EXPECT_NO_THROW(res.schedule.validate(net));
  }
  EXPECT_GT(improved, 0);
}
