#pragma once

// Convergence bounds for the Carleman-Fourier finite section, error metrics,
// phase recovery and the error-surface sweep.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cflin/carleman_classical.hpp"
#include "cflin/carleman_fourier.hpp"
#include "cflin/fourier_field.hpp"
#include "cflin/integrate.hpp"
#include "cflin/kuramoto.hpp"
#include "cflin/work_pool.hpp"

namespace cflin {

/// Envelope constants entering the error bound. The bound is driven by the
/// rate constant c = dfactor * D: dfactor = 2 for a one-dimensional
/// single-frequency field and 2^d for a d-dimensional quasi-periodic field.
struct BoundParams {
  double D = 0.0;
  double r = 0.5;
  double dfactor = 2.0;

  static BoundParams one_dimensional(double D, double r) { return {D, r, 2.0}; }
  static BoundParams multi(double D, double r, int d) { return {D, r, std::ldexp(1.0, d)}; }

  double rate() const { return dfactor * D; }

  void validate() const {
    if (!(D > 0.0) || !std::isfinite(D)) throw std::invalid_argument("bound constant D must be positive");
    if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("bound rate r must lie in (0, 1)");
    if (!(dfactor > 0.0)) throw std::invalid_argument("dimension factor must be positive");
  }
};

/// Horizon below which the bound decays geometrically in N: (1/c)(1/sqrt(r) - 1)^2.
inline double t0_bound(const BoundParams& p) {
  p.validate();
  const double s = 1.0 / std::sqrt(p.r) - 1.0;
  return s * s / p.rate();
}

/// sqrt(ct)/(1-r) (1 + sqrt(ct))^{2N} r^N
inline double theorem_bound(const BoundParams& p, double t, int N) {
  p.validate();
  if (t < 0.0) throw std::invalid_argument("time must be nonnegative");
  if (N < 1) throw std::invalid_argument("section order must be at least 1");
  if (t == 0.0) return 0.0;
  const double q = std::sqrt(p.rate() * t);
  // Evaluate in log space so large N stays finite.
  const double log_b = std::log(q) - std::log1p(-p.r) + 2.0 * N * std::log1p(q) + N * std::log(p.r);
  return std::exp(log_b);
}

class HorizonError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Smallest N0 >= 1 with theorem_bound(p, horizon, N0) <= 1/2.
inline int n0_search(const BoundParams& p, double horizon) {
  if (horizon >= t0_bound(p)) throw HorizonError("horizon exceeds T_0; condition unsatisfiable");
  if (horizon < 0.0) throw std::invalid_argument("horizon must be nonnegative");
  for (int N = 1;; ++N) {
    if (theorem_bound(p, horizon, N) <= 0.5) return N;
    if (N > 10'000'000) throw HorizonError("no admissible N0 found");
  }
}

/// max_j |z_{j;1,N}(t) - e^{i xt_j(t)}| per sample, xt = extend_state(x, taus).
inline std::vector<double> error_primary(const ComplexTrajectory& lifted, const RealTrajectory& reference,
                                         const std::vector<double>& taus) {
  if (lifted.grid.samples != reference.grid.samples) throw std::invalid_argument("grid mismatch");
  std::vector<double> err(lifted.states.size());
  std::vector<double> x;
  for (std::size_t i = 0; i < err.size(); ++i) {
    const Eigen::VectorXd& ref = reference.states[i];
    x.assign(ref.data(), ref.data() + ref.size());
    const std::vector<double> xt = extend_state(x, taus);
    if (static_cast<std::size_t>(lifted.states[i].size()) < xt.size())
      throw std::invalid_argument("lifted state smaller than the extended dimension");
    double e = 0.0;
    for (std::size_t j = 0; j < xt.size(); ++j)
      e = std::max(e, std::abs(lifted.states[i][static_cast<Eigen::Index>(j)] - std::polar(1.0, xt[j])));
    err[i] = e;
  }
  return err;
}

/// Per-component grade-1 errors |z_j(t) - e^{i xt_j(t)}|, one row per sample.
inline std::vector<std::vector<double>> error_primary_components(const ComplexTrajectory& lifted,
                                                                 const RealTrajectory& reference,
                                                                 const std::vector<double>& taus) {
  if (lifted.grid.samples != reference.grid.samples) throw std::invalid_argument("grid mismatch");
  std::vector<std::vector<double>> out(lifted.states.size());
  std::vector<double> x;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Eigen::VectorXd& ref = reference.states[i];
    x.assign(ref.data(), ref.data() + ref.size());
    const std::vector<double> xt = extend_state(x, taus);
    for (std::size_t j = 0; j < xt.size(); ++j)
      out[i].push_back(std::abs(lifted.states[i][static_cast<Eigen::Index>(j)] - std::polar(1.0, xt[j])));
  }
  return out;
}

/// |x_{1,N}(t) - x(t)| per sample for the classical section.
inline std::vector<double> error_classical(const RealTrajectory& classical, const RealTrajectory& reference) {
  if (classical.grid.samples != reference.grid.samples) throw std::invalid_argument("grid mismatch");
  std::vector<double> err(classical.states.size());
  for (std::size_t i = 0; i < err.size(); ++i) {
    const double e = std::abs(classical.states[i][0] - reference.states[i][0]);
    err[i] = std::isnan(e) ? std::numeric_limits<double>::infinity() : e;
  }
  return err;
}

inline constexpr double kMetricFloor = 1e-5;
inline constexpr double kMetricCap = 10.0;

/// Running sup over s <= t of log10(min(cap, max(err(s), floor))).
inline std::vector<double> clip_metric(const std::vector<double>& err, double floor = kMetricFloor,
                                       double cap = kMetricCap) {
  if (!(floor > 0.0) || !(cap > floor)) throw std::invalid_argument("metric requires 0 < floor < cap");
  std::vector<double> out(err.size());
  double sup = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < err.size(); ++i) {
    const double e = std::isnan(err[i]) ? cap : err[i];
    sup = std::max(sup, std::log10(std::min(cap, std::max(e, floor))));
    out[i] = sup;
  }
  return out;
}

class PhaseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Continuous argument of a sampled nonvanishing complex series, anchored at phase0.
/// Increments are principal arguments of consecutive ratios.
inline std::vector<double> extract_phase(const std::vector<Complex>& series, double phase0) {
  std::vector<double> out;
  out.reserve(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (std::abs(series[i]) < 1e-12) throw PhaseError("phase undefined: near-zero modulus at sample " + std::to_string(i));
    if (i == 0) {
      out.push_back(phase0);
      continue;
    }
    const double inc = std::arg(series[i] / series[i - 1]);
    if (std::abs(inc) >= std::numbers::pi / 2) throw PhaseError("grid too coarse for unwrapping");
    out.push_back(out.back() + inc);
  }
  return out;
}

struct ProofChain {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// lhs = (1/N) sum_{m=1}^N C(N,m-1) C(N,m) t^m and rhs = sqrt(t) (1 + sqrt(t))^{2N}.
/// Binomial products are formed exactly in 128-bit integers.
inline ProofChain proof_chain_check(int N, double t) {
  if (N < 1 || N > 60) throw std::invalid_argument("proof chain check supports 1 <= N <= 60");
  if (t < 0.0) throw std::invalid_argument("time must be nonnegative");
  std::vector<unsigned __int128> binom(N + 1);
  binom[0] = 1;
  for (int m = 1; m <= N; ++m) binom[m] = binom[m - 1] * static_cast<unsigned>(N - m + 1) / static_cast<unsigned>(m);
  long double lhs = 0.0L;
  long double tp = 1.0L;
  for (int m = 1; m <= N; ++m) {
    tp *= t;
    lhs += static_cast<long double>(binom[m - 1] * binom[m]) * tp;
  }
  lhs /= N;
  const long double st = std::sqrt(static_cast<long double>(t));
  const long double rhs = st * std::pow(1.0L + st, 2 * N);
  return {static_cast<double>(lhs), static_cast<double>(rhs)};
}

enum class SweepMethod { classical, carleman_fourier };

inline const char* to_string(SweepMethod m) {
  return m == SweepMethod::classical ? "classical" : "carleman-fourier";
}

struct SweepConfig {
  double omega1 = 0.0;
  double ktilde = 1.0;
  SweepMethod method = SweepMethod::carleman_fourier;
  int N = 10;
  std::vector<double> theta0_axis;
  std::vector<double> t_axis;
  double reference_tol = 1e-12;
  double lifted_tol = 1e-10;
  double floor = kMetricFloor;
  double cap = kMetricCap;
  unsigned workers = 1;
};

struct CellFailure {
  std::size_t row = 0;
  double theta0 = 0.0;
  std::string reason;
};

struct ErrorSurface {
  std::vector<double> theta0_axis;
  std::vector<double> t_axis;
  /// values[i][j]: metric at theta0_axis[i], t_axis[j].
  std::vector<std::vector<double>> values;
  SweepMethod metric = SweepMethod::carleman_fourier;
  int N = 0;
  double omega1 = 0.0;
  double ktilde = 1.0;
  std::vector<CellFailure> failures;
  /// Rows whose classical section hit the divergence clip.
  std::vector<std::size_t> diverged_rows;
};

/// One row of the error surface: metric over t_axis for a single initial phase.
inline std::vector<double> sweep_row(const SweepConfig& cfg, const FourierField1D& field, double theta0,
                                     bool* diverged = nullptr) {
  const TimeGrid grid = TimeGrid::from_samples(cfg.t_axis);
  const RealTrajectory ref = integrate_reference(field, theta0, grid, cfg.reference_tol);
  std::vector<double> err;
  if (cfg.method == SweepMethod::classical) {
    const ClassicalSystem sys = build_classical_kuramoto(cfg.omega1, cfg.ktilde, theta0, cfg.N);
    const RealTrajectory traj = integrate_classical(sys, grid, cfg.lifted_tol);
    if (diverged) *diverged = traj.meta.diverged;
    err = error_classical(traj, ref);
  } else {
    const LiftedSystem sys = lift_1d(field, theta0, cfg.N);
    const ComplexTrajectory traj = integrate_linear(sys, grid, cfg.lifted_tol);
    err = error_primary(traj, ref, {1.0});
  }
  return clip_metric(err, cfg.floor, cfg.cap);
}

/// E_C or E_CF over theta0_axis x t_axis for the reduced two-oscillator Kuramoto model.
/// Failed rows are recorded at the cap value and never abort the sweep.
inline ErrorSurface sweep_error_surface(const SweepConfig& cfg) {
  if (cfg.theta0_axis.empty() || cfg.t_axis.empty()) throw std::invalid_argument("sweep axes must be nonempty");
  if (!std::is_sorted(cfg.theta0_axis.begin(), cfg.theta0_axis.end()))
    throw std::invalid_argument("theta0 axis must be sorted");
  if (cfg.N < 1) throw std::invalid_argument("section order must be at least 1");
  const FourierField1D field = reduced_field(cfg.omega1, cfg.ktilde);

  ErrorSurface out;
  out.theta0_axis = cfg.theta0_axis;
  out.t_axis = cfg.t_axis;
  out.metric = cfg.method;
  out.N = cfg.N;
  out.omega1 = cfg.omega1;
  out.ktilde = cfg.ktilde;
  out.values.assign(cfg.theta0_axis.size(), {});
  std::vector<std::string> reasons(cfg.theta0_axis.size());
  std::vector<char> diverged(cfg.theta0_axis.size(), 0);

  parallel_for(cfg.theta0_axis.size(), cfg.workers, [&](std::size_t i) {
    try {
      bool div = false;
      out.values[i] = sweep_row(cfg, field, cfg.theta0_axis[i], &div);
      diverged[i] = div ? 1 : 0;
    } catch (const std::exception& e) {
      out.values[i].assign(cfg.t_axis.size(), std::log10(cfg.cap));
      reasons[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < reasons.size(); ++i) {
    if (!reasons[i].empty()) out.failures.push_back({i, cfg.theta0_axis[i], reasons[i]});
    if (diverged[i]) out.diverged_rows.push_back(i);
  }
  return out;
}

}  // namespace cflin
