#include "vibesync/averaging.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "vibesync/errors.hpp"

namespace vibesync {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double spectral_norm(const Eigen::MatrixXd& A) {
  if (A.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A.transpose() * A, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

// Best rational approximation p/q of x with q <= qmax, via continued fractions.
bool rationalize(double x, long qmax, long& p, long& q) {
  long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double r = x;
  for (int it = 0; it < 64; ++it) {
    const double a = std::floor(r);
    const long ai = static_cast<long>(a);
    const long p2 = ai * p1 + p0, q2 = ai * q1 + q0;
    if (q2 > qmax) break;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    if (std::abs(x - static_cast<double>(p1) / static_cast<double>(q1)) <= 1e-12 * std::abs(x)) {
      p = p1;
      q = q1;
      return true;
    }
    const double frac = r - a;
    if (frac < 1e-15) break;
    r = 1.0 / frac;
  }
  return false;
}

// Bump weight for smooth (weighted Birkhoff) averages on [0, 1].
double bump(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return std::exp(-1.0 / (x * (1.0 - x)));
}

struct State {
  Eigen::MatrixXd phi, psi, integral;
  double mass = 0.0;
};

struct Integration {
  Eigen::MatrixXd mean;
  double max_phi = 1.0, max_psi = 1.0, max_product = 1.0;
  Eigen::MatrixXd phi_end;
  bool blown_up = false;
};

// Transition matrices beyond this size mean Phi has a positive Floquet
// exponent; the averaged limit then does not exist.
constexpr double kBlowup = 1e8;
constexpr double kMonodromyTol = 1e-6;

// Integrates Phi, Psi and the weighted integral of Psi J Phi over [0, horizon].
Integration integrate(const Eigen::MatrixXd& J, const PeriodicMatrixFunction& P, double horizon,
                      double h_target, bool weighted, bool track_norms) {
  const int d = P.dim;
  const long steps = std::max(1L, static_cast<long>(std::ceil(horizon / h_target)));
  const double h = horizon / static_cast<double>(steps);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
  State x{I, I, Eigen::MatrixXd::Zero(d, d), 0.0};
  Integration out;

  auto weight = [&](double s) { return weighted ? bump(s / horizon) : 1.0; };
  auto deriv = [&](double s, const State& y, const Eigen::MatrixXd& Ps) {
    State dy;
    const double w = weight(s);
    dy.phi = Ps * y.phi;
    dy.psi = -y.psi * Ps;
    dy.integral = w * (y.psi * J * y.phi);
    dy.mass = w;
    return dy;
  };
  auto axpy = [](const State& y, double a, const State& k) {
    return State{y.phi + a * k.phi, y.psi + a * k.psi, y.integral + a * k.integral, y.mass + a * k.mass};
  };

  for (long n = 0; n < steps; ++n) {
    const double s = static_cast<double>(n) * h;
    const Eigen::MatrixXd P0 = P.eval(s), Ph = P.eval(s + 0.5 * h), P1 = P.eval(s + h);
    const State k1 = deriv(s, x, P0);
    const State k2 = deriv(s + 0.5 * h, axpy(x, 0.5 * h, k1), Ph);
    const State k3 = deriv(s + 0.5 * h, axpy(x, 0.5 * h, k2), Ph);
    const State k4 = deriv(s + h, axpy(x, h, k3), P1);
    x.phi += h / 6.0 * (k1.phi + 2.0 * k2.phi + 2.0 * k3.phi + k4.phi);
    x.psi += h / 6.0 * (k1.psi + 2.0 * k2.psi + 2.0 * k3.psi + k4.psi);
    x.integral += h / 6.0 * (k1.integral + 2.0 * k2.integral + 2.0 * k3.integral + k4.integral);
    x.mass += h / 6.0 * (k1.mass + 2.0 * k2.mass + 2.0 * k3.mass + k4.mass);
    if (track_norms) {
      const double a = spectral_norm(x.phi), b = spectral_norm(x.psi);
      out.max_phi = std::max(out.max_phi, a);
      out.max_psi = std::max(out.max_psi, b);
      out.max_product = std::max(out.max_product, a * b);
    }
    const double size = std::max(x.phi.cwiseAbs().maxCoeff(), x.psi.cwiseAbs().maxCoeff());
    if (!(size < kBlowup)) {
      out.blown_up = true;
      break;
    }
  }
  out.phi_end = x.phi;
  out.mean = x.integral / x.mass;
  return out;
}

}  // namespace

double PeriodicMatrixFunction::max_frequency() const {
  double m = 0.0;
  for (const auto& t : terms) m = std::max(m, t.frequency);
  return m;
}

double PeriodicMatrixFunction::min_frequency() const {
  double m = terms.empty() ? 0.0 : terms.front().frequency;
  for (const auto& t : terms) m = std::min(m, t.frequency);
  return m;
}

Eigen::MatrixXd PeriodicMatrixFunction::eval(double s) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& t : terms) out += (t.amplitude * std::sin(t.frequency * s + t.phase)) * t.M;
  return out;
}

std::optional<double> common_period(const std::vector<double>& frequencies) {
  if (frequencies.empty()) return std::nullopt;
  const double f0 = frequencies.front();
  std::vector<long> p(frequencies.size()), q(frequencies.size());
  long Q = 1;
  for (std::size_t e = 0; e < frequencies.size(); ++e) {
    if (!(frequencies[e] > 0.0)) return std::nullopt;
    if (!rationalize(frequencies[e] / f0, 1000, p[e], q[e])) return std::nullopt;
    Q = std::lcm(Q, q[e]);
    if (Q > 1000000) return std::nullopt;
  }
  long G = 0;
  for (std::size_t e = 0; e < frequencies.size(); ++e) G = std::gcd(G, p[e] * (Q / q[e]));
  const double fundamental = f0 * static_cast<double>(G) / static_cast<double>(Q);
  return kTwoPi / fundamental;
}

Eigen::MatrixXd transition_matrix(const PeriodicMatrixFunction& P, double s0, double s1,
                                  double step) {
  const int d = P.dim;
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(d, d);
  if (s1 == s0 || P.zero()) return phi;
  const long steps = std::max(1L, static_cast<long>(std::ceil(std::abs(s1 - s0) / step)));
  const double h = (s1 - s0) / static_cast<double>(steps);
  for (long n = 0; n < steps; ++n) {
    const double s = s0 + static_cast<double>(n) * h;
    const Eigen::MatrixXd Ph = P.eval(s + 0.5 * h);
    const Eigen::MatrixXd k1 = P.eval(s) * phi;
    const Eigen::MatrixXd k2 = Ph * (phi + 0.5 * h * k1);
    const Eigen::MatrixXd k3 = Ph * (phi + 0.5 * h * k2);
    const Eigen::MatrixXd k4 = P.eval(s + h) * (phi + h * k3);
    phi += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return phi;
}

AveragedMatrix averaged_matrix(const Eigen::MatrixXd& J, const PeriodicMatrixFunction& P,
                               const AveragingOptions& opts) {
  if (J.rows() != J.cols()) throw NumericalError("averaged_matrix needs a square base matrix");
  if (!P.zero() && P.dim != J.rows())
    throw NumericalError("periodic matrix function dimension does not match base matrix");
  AveragedMatrix out;
  if (P.zero() || J.size() == 0) {
    out.J_bar = J;
    out.exact_period = true;
    return out;
  }
  const double h = kTwoPi / (P.max_frequency() * opts.steps_per_period);
  const double window = opts.window_periods * kTwoPi / P.min_frequency();

  std::vector<double> freqs;
  for (const auto& t : P.terms) freqs.push_back(t.frequency);
  const auto period = common_period(freqs);
  if (period && !opts.force_long_horizon && *period <= window) {
    const auto res = integrate(J, P, *period, h, false, true);
    // One period is the exact average only when Phi itself is periodic.
    const double defect = (res.phi_end - Eigen::MatrixXd::Identity(P.dim, P.dim)).cwiseAbs().maxCoeff();
    if (defect <= kMonodromyTol) {
      out.J_bar = res.mean;
      out.horizon = *period;
      out.exact_period = true;
      out.max_phi = res.max_phi;
      out.max_psi = res.max_psi;
      out.max_product = res.max_product;
      return out;
    }
  }

  // Smoothly weighted means over doubling horizons.
  auto first = integrate(J, P, window, h, true, true);
  out.max_phi = first.max_phi;
  out.max_psi = first.max_psi;
  out.max_product = first.max_product;
  Eigen::MatrixXd prev = first.mean;
  out.J_bar = prev;
  out.horizon = window;
  out.converged = false;
  out.residual = std::numeric_limits<double>::infinity();
  out.bounded = !first.blown_up;
  for (int k = 2; out.bounded && k <= opts.horizon_cap; k *= 2) {
    const auto res = integrate(J, P, k * window, h, true, false);
    if (res.blown_up) {
      out.bounded = false;
      break;
    }
    out.residual = (res.mean - prev).cwiseAbs().maxCoeff();
    out.J_bar = res.mean;
    out.horizon = k * window;
    prev = res.mean;
    if (out.residual < opts.rtol * std::max(1.0, res.mean.cwiseAbs().maxCoeff())) {
      out.converged = true;
      break;
    }
  }
  return out;
}

double effective_weight_shift(double a_reverse, double u, double beta) {
  if (!(beta > 0.0)) throw DesignError("vibration frequency must be positive");
  return -a_reverse * u * u / (2.0 * beta * beta);
}

double amplitude_for_shift(double d, double a_reverse, double beta) {
  if (!(beta > 0.0)) throw DesignError("vibration frequency must be positive");
  if (d == 0.0) return 0.0;
  if (a_reverse == 0.0 || (d > 0.0) == (a_reverse > 0.0)) {
    std::ostringstream os;
    os << "shift " << d << " is not realizable against reverse entry " << a_reverse;
    throw DesignError(os.str());
  }
  return beta * std::sqrt(2.0 * std::abs(d) / std::abs(a_reverse));
}

}  // namespace vibesync
