#include "vibesync/kernels.hpp"

#include <cmath>

namespace vibesync::kernels {

CouplingCsr build_csr(const OscillatorNetwork& net, const VibrationSchedule* sched) {
  CouplingCsr g;
  g.n = net.size();
  g.row_ptr.push_back(0);
  g.vib_ptr.push_back(0);
  for (int i = 0; i < g.n; ++i) {
    for (int j = 0; j < g.n; ++j) {
      std::vector<int> vibs;
      if (sched)
        for (int k = 0; k < static_cast<int>(sched->entries.size()); ++k) {
          const Edge& e = sched->entries[k].edge;
          if (e.sink == i && e.source == j) vibs.push_back(k);
        }
      if (net.W(i, j) == 0.0 && vibs.empty()) continue;
      g.col.push_back(j);
      g.weight.push_back(net.W(i, j));
      g.vib_index.insert(g.vib_index.end(), vibs.begin(), vibs.end());
      g.vib_ptr.push_back(static_cast<int>(g.vib_index.size()));
    }
    g.row_ptr.push_back(static_cast<int>(g.col.size()));
  }
  return g;
}

FastVibration build_vibration(const VibrationSchedule* sched) {
  FastVibration v;
  if (!sched) return v;
  for (const auto& e : sched->entries) {
    v.amp.push_back(e.amplitude / sched->epsilon);
    v.freq.push_back(e.frequency / sched->epsilon);
    v.phase.push_back(e.phase);
  }
  return v;
}

void vibration_values(const FastVibration& v, double t, double* out) {
  for (std::size_t k = 0; k < v.amp.size(); ++k) out[k] = v.amp[k] * std::sin(v.freq[k] * t + v.phase[k]);
}

namespace {

inline double row_sum(const CouplingCsr& g, const double* vib, const double* theta, int i) {
  const double ti = theta[i];
  double s = 0.0;
  for (int p = g.row_ptr[i]; p < g.row_ptr[i + 1]; ++p) {
    double w = g.weight[p];
    for (int q = g.vib_ptr[p]; q < g.vib_ptr[p + 1]; ++q) w += vib[g.vib_index[q]];
    s += w * std::sin(theta[g.col[p]] - ti);
  }
  return s;
}

}  // namespace

void rhs_serial(const CouplingCsr& g, const double* omega, const double* vib, const double* theta,
                double* out) {
  for (int i = 0; i < g.n; ++i) out[i] = omega[i] + row_sum(g, vib, theta, i);
}

void rhs_omp(const CouplingCsr& g, const double* omega, const double* vib, const double* theta,
             double* out) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < g.n; ++i) out[i] = omega[i] + row_sum(g, vib, theta, i);
}

}  // namespace vibesync::kernels
