#pragma once

#include <vector>

#include "vibesync/dynamics.hpp"
#include "vibesync/network.hpp"

// Right-hand side kernels for the (vibrated) Kuramoto model. The serial and
// OpenMP variants sum each row in the same order and agree bitwise.
namespace vibesync::kernels {

struct CouplingCsr {
  int n = 0;
  std::vector<int> row_ptr;     // by receiving node
  std::vector<int> col;         // sending node
  std::vector<double> weight;
  std::vector<int> vib_ptr;     // slot -> range into vib_index
  std::vector<int> vib_index;
};

struct FastVibration {
  std::vector<double> amp;    // u / eps
  std::vector<double> freq;   // beta / eps
  std::vector<double> phase;
};

CouplingCsr build_csr(const OscillatorNetwork& net, const VibrationSchedule* sched);
FastVibration build_vibration(const VibrationSchedule* sched);

void vibration_values(const FastVibration& v, double t, double* out);

void rhs_serial(const CouplingCsr& g, const double* omega, const double* vib, const double* theta,
                double* out);
void rhs_omp(const CouplingCsr& g, const double* omega, const double* vib, const double* theta,
             double* out);

}  // namespace vibesync::kernels
