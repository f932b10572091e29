// Serial reference vs OpenMP kernels on ring-of-cliques networks.
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "vibesync/dynamics.hpp"
#include "vibesync/kernels.hpp"

using namespace vibesync;

namespace {

struct Fixture {
  OscillatorNetwork net;
  ClusterPartition part;
  VibrationSchedule sched;
  Eigen::VectorXd theta;
};

// Clusters of size m with all-to-all intra links and one inter link per
// node, so every cluster is externally uniform.
Fixture make_fixture(int clusters, int m) {
  Fixture f;
  const int n = clusters * m;
  f.net.omega = Eigen::VectorXd::Zero(n);
  f.net.W = Eigen::MatrixXd::Zero(n, n);
  for (int c = 0; c < clusters; ++c) {
    std::vector<int> block;
    for (int a = 0; a < m; ++a) {
      const int i = c * m + a;
      block.push_back(i);
      f.net.omega(i) = 1.0 + c;
      for (int b = 0; b < m; ++b)
        if (a != b) f.net.W(i, c * m + b) = 1.0;
      const int nxt = ((c + 1) % clusters) * m + a;
      if (nxt != i) {
        f.net.W(i, nxt) += 0.5;
        f.net.W(nxt, i) += 0.5;
      }
    }
    f.part.blocks.push_back(block);
    if (m > 1) f.sched.entries.push_back({{c * m, c * m + 1}, 1.0, 1.0 + c, 0.0});
  }
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 6.28);
  f.theta.resize(n);
  for (int i = 0; i < n; ++i) f.theta(i) = u(rng);
  return f;
}

template <bool Parallel>
void BM_rhs(benchmark::State& state) {
  const auto f = make_fixture(static_cast<int>(state.range(0)), 16);
  const auto g = kernels::build_csr(f.net, &f.sched);
  const auto v = kernels::build_vibration(&f.sched);
  std::vector<double> vib(v.amp.size()), out(f.net.size());
  kernels::vibration_values(v, 0.3, vib.data());
  for (auto _ : state) {
    if constexpr (Parallel) kernels::rhs_omp(g, f.net.omega.data(), vib.data(), f.theta.data(), out.data());
    else kernels::rhs_serial(g, f.net.omega.data(), vib.data(), f.theta.data(), out.data());
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(g.col.size()));
}

template <bool Parallel>
void BM_batch(benchmark::State& state) {
  const auto f = make_fixture(4, 6);
  std::vector<SimulationJob> jobs(static_cast<std::size_t>(state.range(0)));
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    jobs[j].net = &f.net;
    jobs[j].part = &f.part;
    jobs[j].sched = nullptr;
    jobs[j].theta0 = f.theta * (1.0 + 0.01 * static_cast<double>(j));
    jobs[j].opts.t_span = 5.0;
    jobs[j].opts.step = 1e-3;
    jobs[j].opts.record_stride = 100;
  }
  for (auto _ : state) benchmark::DoNotOptimize(simulate_batch(jobs, Parallel));
}

}  // namespace

BENCHMARK(BM_rhs<false>)->Arg(4)->Arg(16)->Arg(64)->Arg(256);
BENCHMARK(BM_rhs<true>)->Arg(4)->Arg(16)->Arg(64)->Arg(256);
BENCHMARK(BM_batch<false>)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_batch<true>)->Arg(8)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
