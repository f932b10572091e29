#include "vibesync/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "vibesync/errors.hpp"
#include "vibesync/kernels.hpp"

namespace vibesync {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

double VibrationSchedule::max_frequency() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.frequency);
  return m;
}

void VibrationSchedule::validate(const OscillatorNetwork& net) const {
  if (!(epsilon > 0.0)) throw ConfigError("schedule epsilon must be positive");
  const int n = net.size();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& e = entries[k];
    std::ostringstream where;
    where << "schedule entry " << k << " (" << e.edge.source << "->" << e.edge.sink << ")";
    if (e.edge.source < 0 || e.edge.source >= n || e.edge.sink < 0 || e.edge.sink >= n ||
        e.edge.source == e.edge.sink)
      throw ConfigError(where.str() + ": node index out of range");
    if (!(net.W(e.edge.sink, e.edge.source) > 0.0))
      throw ConfigError(where.str() + ": vibrated edge does not exist in the network");
    if (!(e.frequency > 0.0)) throw ConfigError(where.str() + ": frequency must be positive");
    if (!(e.amplitude >= 0.0)) throw ConfigError(where.str() + ": amplitude must be nonnegative");
    if (!(e.phase >= 0.0 && e.phase < kTwoPi))
      throw ConfigError(where.str() + ": phase must lie in [0, 2pi)");
  }
}

VibrationEntry signed_entry(Edge edge, double coefficient, double frequency, double phase) {
  VibrationEntry e{edge, std::abs(coefficient), frequency, phase};
  if (coefficient < 0.0) e.phase += std::numbers::pi;
  e.phase = wrap_2pi(e.phase);
  return e;
}

double wrap_pi(double a) {
  double r = std::fmod(a + std::numbers::pi, kTwoPi);
  if (r <= 0.0) r += kTwoPi;
  return r - std::numbers::pi;
}

double wrap_2pi(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

double auto_step(double t_span, const VibrationSchedule* sched) {
  double h = t_span / 1e4;
  if (sched && !sched->empty()) h = std::min(h, kTwoPi * sched->epsilon / (40.0 * sched->max_frequency()));
  return h;
}

Trajectory simulate(const OscillatorNetwork& net, const ClusterPartition& part,
                    const VibrationSchedule* sched, const Eigen::VectorXd& theta0,
                    const SimulationOptions& opts) {
  const int n = net.size();
  if (theta0.size() != n) throw ConfigError("initial phase vector has wrong length");
  if (!(opts.t_span > 0.0)) throw ConfigError("t_span must be positive");
  if (opts.record_stride < 1) throw ConfigError("record stride must be at least 1");
  if (sched && sched->empty()) sched = nullptr;
  if (sched) sched->validate(net);

  double h = opts.step > 0.0 ? opts.step : auto_step(opts.t_span, sched);
  if (sched) {
    const double period = kTwoPi * sched->epsilon / sched->max_frequency();
    if (h > period / 20.0) {
      std::ostringstream os;
      os << "step " << h << " resolves the fastest vibration with fewer than 20 samples per period "
         << period;
      throw ConfigError(os.str());
    }
  }
  const long steps = std::max(1L, static_cast<long>(std::ceil(opts.t_span / h - 1e-9)));
  h = opts.t_span / static_cast<double>(steps);

  const auto g = kernels::build_csr(net, sched);
  const auto fv = kernels::build_vibration(sched);
  auto rhs = opts.parallel_rhs ? kernels::rhs_omp : kernels::rhs_serial;
  std::vector<double> vib(fv.amp.size());
  std::vector<double> th(theta0.data(), theta0.data() + n), tmp(n), k1(n), k2(n), k3(n), k4(n);

  Trajectory traj;
  traj.step = h;
  const long records = steps / opts.record_stride + 1 + (steps % opts.record_stride ? 1 : 0);
  traj.theta.resize(records, n);
  traj.t.reserve(records);
  traj.dist.reserve(records);
  auto record = [&](double t) {
    const int row = static_cast<int>(traj.t.size());
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) {
      v(i) = th[i];
      traj.theta(row, i) = wrap_2pi(th[i]);
    }
    traj.t.push_back(t);
    traj.dist.push_back(manifold_distance(v, part));
  };
  record(0.0);

  const double* om = net.omega.data();
  for (long s = 0; s < steps; ++s) {
    const double t = static_cast<double>(s) * h;
    kernels::vibration_values(fv, t, vib.data());
    rhs(g, om, vib.data(), th.data(), k1.data());
    for (int i = 0; i < n; ++i) tmp[i] = th[i] + 0.5 * h * k1[i];
    kernels::vibration_values(fv, t + 0.5 * h, vib.data());
    rhs(g, om, vib.data(), tmp.data(), k2.data());
    for (int i = 0; i < n; ++i) tmp[i] = th[i] + 0.5 * h * k2[i];
    rhs(g, om, vib.data(), tmp.data(), k3.data());
    for (int i = 0; i < n; ++i) tmp[i] = th[i] + h * k3[i];
    kernels::vibration_values(fv, t + h, vib.data());
    rhs(g, om, vib.data(), tmp.data(), k4.data());
    for (int i = 0; i < n; ++i) th[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    if ((s + 1) % opts.record_stride == 0 || s + 1 == steps)
      record(static_cast<double>(s + 1) * h);
  }
  traj.final_unwrapped = Eigen::Map<Eigen::VectorXd>(th.data(), n);
  return traj;
}

std::vector<Trajectory> simulate_batch(const std::vector<SimulationJob>& jobs, bool parallel) {
  std::vector<Trajectory> out(jobs.size());
  const int count = static_cast<int>(jobs.size());
  if (!parallel) {
    for (int k = 0; k < count; ++k)
      out[k] = simulate(*jobs[k].net, *jobs[k].part, jobs[k].sched, jobs[k].theta0, jobs[k].opts);
    return out;
  }
  std::vector<std::string> errors(count);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < count; ++k) {
    try {
      out[k] = simulate(*jobs[k].net, *jobs[k].part, jobs[k].sched, jobs[k].theta0, jobs[k].opts);
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  }
  for (int k = 0; k < count; ++k)
    if (!errors[k].empty()) throw ConfigError("batch job " + std::to_string(k) + ": " + errors[k]);
  return out;
}

IncrementalCoords incremental_coords(const Eigen::VectorXd& theta,
                                     const IncidenceDecomposition& dec) {
  IncrementalCoords c;
  c.x = dec.B_hat_intra().transpose() * theta;
  c.y = dec.B_hat_inter().transpose() * theta;
  for (int i = 0; i < c.x.size(); ++i) c.x(i) = wrap_pi(c.x(i));
  for (int i = 0; i < c.y.size(); ++i) c.y(i) = wrap_pi(c.y(i));
  return c;
}

double manifold_distance(const Eigen::VectorXd& theta, const ClusterPartition& part) {
  double d = 0.0;
  for (const auto& blk : part.blocks)
    for (std::size_t a = 0; a < blk.size(); ++a)
      for (std::size_t b = a + 1; b < blk.size(); ++b)
        d = std::max(d, std::abs(wrap_pi(theta(blk[a]) - theta(blk[b]))));
  return d;
}

const char* to_string(StabilityKind k) {
  switch (k) {
    case StabilityKind::decaying: return "decaying";
    case StabilityKind::bounded: return "bounded";
    case StabilityKind::growing: return "growing";
  }
  return "unknown";
}

StabilityVerdict classify_distance(const std::vector<double>& t, const std::vector<double>& dist,
                                   double window) {
  if (t.size() < 3 || !(window > 0.0) || t.back() - t.front() <= 2.0 * window)
    throw ConfigError("trajectory must be longer than twice the classification window");
  const double start = t.back() - window;
  std::size_t first = 0;
  while (t[first] < start) ++first;

  // Phase differences below this are round-off of unwrapped phases.
  constexpr double kResolution = 1e-12;
  StabilityVerdict v;
  // Least squares fit of log(dist) against t over the resolvable samples of
  // the trailing window. A run that ends at round-off level, or a window that
  // is (almost) all round-off, counts as collapsed onto the manifold.
  double st = 0, sy = 0, stt = 0, sty = 0, syy = 0;
  int used = 0;
  for (std::size_t k = first; k < t.size(); ++k) {
    if (!(dist[k] > kResolution)) continue;
    const double x = t[k] - start;
    const double y = std::log(dist[k]);
    st += x;
    sy += y;
    stt += x * x;
    sty += x * y;
    syy += y * y;
    ++used;
  }
  if (used < 3 || !(dist.back() > kResolution)) {
    v.kind = StabilityKind::decaying;
    v.rate = std::numeric_limits<double>::infinity();
    v.slope = -v.rate;
    v.r_squared = 1.0;
    return v;
  }
  const double m = used;
  const double vt = stt - st * st / m;
  const double vy = syy - sy * sy / m;
  const double cty = sty - st * sy / m;
  v.slope = vt > 0.0 ? cty / vt : 0.0;
  v.r_squared = (vt > 0.0 && vy > 0.0) ? cty * cty / (vt * vy) : 0.0;
  v.rate = -v.slope;
  if (v.slope < -1e-3 && v.r_squared > 0.5)
    v.kind = StabilityKind::decaying;
  else if (v.slope > 1e-3)
    v.kind = StabilityKind::growing;
  else
    v.kind = StabilityKind::bounded;
  return v;
}

StabilityVerdict classify_stability(const Trajectory& traj, double window) {
  return classify_distance(traj.t, traj.dist, window);
}

}  // namespace vibesync
