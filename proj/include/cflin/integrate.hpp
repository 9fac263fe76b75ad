#pragma once

// Time integration of the original nonlinear systems and of their finite
// sections.
//
// All solvers share one Dormand-Prince 5(4) kernel with the standard
// fourth-order continuous extension, written against Eigen vectors so the
// same code advances real (VectorXd) and complex (VectorXcd) states.

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <type_traits>
#include <string>
#include <utility>
#include <vector>

#include "cflin/carleman_classical.hpp"
#include "cflin/carleman_fourier.hpp"
#include "cflin/fourier_field.hpp"

namespace cflin {

struct TimeGrid {
  std::vector<double> samples;

  static TimeGrid uniform(double t_end, std::size_t count) {
    if (!(t_end > 0.0)) throw std::invalid_argument("time horizon must be positive");
    if (count < 2) throw std::invalid_argument("a time grid needs at least two samples");
    TimeGrid g;
    g.samples.resize(count);
    for (std::size_t i = 0; i < count; ++i) g.samples[i] = t_end * static_cast<double>(i) / static_cast<double>(count - 1);
    g.samples.back() = t_end;
    return g;
  }

  static TimeGrid from_samples(std::vector<double> samples) {
    if (samples.empty() || samples.front() != 0.0) throw std::invalid_argument("time grid must start at 0");
    for (std::size_t i = 1; i < samples.size(); ++i)
      if (!(samples[i] > samples[i - 1])) throw std::invalid_argument("time grid must be strictly increasing");
    return TimeGrid{std::move(samples)};
  }

  double t_end() const { return samples.back(); }
  std::size_t size() const { return samples.size(); }
};

struct TrajectoryMeta {
  std::string method;
  double tol = 0.0;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  std::size_t rhs_evaluations = 0;
  bool diverged = false;
  double divergence_time = std::numeric_limits<double>::quiet_NaN();
};

template <class State>
struct Trajectory {
  TimeGrid grid;
  std::vector<State> states;
  TrajectoryMeta meta;
};

using RealTrajectory = Trajectory<Eigen::VectorXd>;
using ComplexTrajectory = Trajectory<Eigen::VectorXcd>;

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double last_time)
      : std::runtime_error(what + " (last valid time " + std::to_string(last_time) + ")"), last_time_(last_time) {}
  double last_time() const { return last_time_; }

 private:
  double last_time_;
};

struct SolverOptions {
  double tol = 1e-10;
  /// Components beyond this magnitude stop the solve and mark divergence.
  double clip = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 50'000'000;
};

inline constexpr double kMinTol = 1e-14;
inline constexpr double kMaxTol = 1e-6;
inline constexpr double kClassicalClip = 1e12;

namespace detail {

inline void check_tol(double tol) {
  if (!(tol >= kMinTol && tol <= kMaxTol)) throw std::invalid_argument("tolerance must lie in [1e-14, 1e-6]");
}

// Componentwise max(|re|, |im|); reduces to |x| for real vectors.
template <class State>
Eigen::VectorXd split_abs(const State& x) {
  return x.real().cwiseAbs().cwiseMax(x.imag().cwiseAbs());
}

template <class State>
bool all_finite(const State& x) {
  return x.real().allFinite() && x.imag().allFinite();
}

}  // namespace detail

/// Adaptive Dormand-Prince 5(4) on `grid` for y' = f(t, y).
///
/// The local error estimate of every accepted step satisfies
/// max_i |err_i| / (tol (1 + max(|y_i|, |y_new_i|))) <= 1.
template <class State, class Rhs>
Trajectory<State> dopri5(Rhs&& f, const State& y0, const TimeGrid& grid, const SolverOptions& opt,
                         std::string method = "dopri5") {
  detail::check_tol(opt.tol);
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                   a76 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;
  constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                   d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                   d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

  Trajectory<State> out;
  out.grid = grid;
  out.meta.method = std::move(method);
  out.meta.tol = opt.tol;
  out.states.reserve(grid.size());

  const double t_end = grid.t_end();
  const double tol = opt.tol;
  auto err_norm = [&](const State& err, const State& ya, const State& yb) {
    const Eigen::VectorXd scale =
        (detail::split_abs(ya).cwiseMax(detail::split_abs(yb)).array() * tol + tol).matrix();
    return (detail::split_abs(err).array() / scale.array()).maxCoeff();
  };
  auto clip_state = [&](const State& y) {
    State c = y;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      auto clamp = [&](double v) {
        if (std::isnan(v)) return opt.clip;
        return std::clamp(v, -opt.clip, opt.clip);
      };
      if constexpr (std::is_same_v<typename State::Scalar, double>) {
        c[i] = clamp(c[i]);
      } else {
        c[i] = typename State::Scalar(clamp(c[i].real()), clamp(c[i].imag()));
      }
    }
    return c;
  };

  std::size_t next = 0;
  while (next < grid.size() && grid.samples[next] <= 0.0) {
    out.states.push_back(y0);
    ++next;
  }
  if (next == grid.size()) return out;

  double t = 0.0;
  State y = y0;
  State k1 = f(t, y);
  ++out.meta.rhs_evaluations;

  // Initial step (Hairer & Wanner heuristic).
  double h;
  {
    const Eigen::VectorXd sc = (detail::split_abs(y).array() * tol + tol).matrix();
    const double d0 = (detail::split_abs(y).array() / sc.array()).maxCoeff();
    const double dd1 = (detail::split_abs(k1).array() / sc.array()).maxCoeff();
    double h0 = (d0 < 1e-5 || dd1 < 1e-5) ? 1e-6 : 0.01 * d0 / dd1;
    h0 = std::min(h0, t_end);
    State yt = y + h0 * k1;
    State k2 = f(t + h0, yt);
    ++out.meta.rhs_evaluations;
    const double d2 = (detail::split_abs(State(k2 - k1)).array() / sc.array()).maxCoeff() / h0;
    const double mx = std::max(dd1, d2);
    const double h1 = mx <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / mx, 1.0 / 5.0);
    h = std::min({100 * h0, h1, t_end});
  }

  double fac_max = 5.0;
  while (next < grid.size()) {
    if (out.meta.accepted_steps + out.meta.rejected_steps >= opt.max_steps)
      throw IntegrationError("step budget exhausted", t);
    bool last = false;
    if (t + h >= t_end || t + 1.01 * h >= t_end) {
      h = t_end - t;
      last = true;
    }
    if (h < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)))
      throw IntegrationError("step size underflow", t);

    const State k2 = f(t + c2 * h, State(y + h * (a21 * k1)));
    const State k3 = f(t + c3 * h, State(y + h * (a31 * k1 + a32 * k2)));
    const State k4 = f(t + c4 * h, State(y + h * (a41 * k1 + a42 * k2 + a43 * k3)));
    const State k5 = f(t + c5 * h, State(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
    const State k6 = f(t + h, State(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
    const State y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    const State k7 = f(t + h, y1);
    out.meta.rhs_evaluations += 6;
    const State err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    const double en = detail::all_finite(y1) ? err_norm(err, y, y1) : std::numeric_limits<double>::infinity();
    if (!(en <= 1.0)) {
      ++out.meta.rejected_steps;
      const double fac = std::isfinite(en) ? std::max(0.2, 0.9 * std::pow(en, -0.2)) : 0.2;
      h *= fac;
      fac_max = 1.0;
      continue;
    }
    ++out.meta.accepted_steps;

    const double t_new = last ? t_end : t + h;
    // Continuous extension coefficients.
    const State ydiff = y1 - y;
    const State bspl = h * k1 - ydiff;
    const State r4 = ydiff - h * k7 - bspl;
    const State r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
    while (next < grid.size() && grid.samples[next] <= t_new) {
      const double ts = grid.samples[next];
      if (ts == t_new) {
        out.states.push_back(y1);
      } else {
        const double th = (ts - t) / h;
        const double th1 = 1.0 - th;
        out.states.push_back(y + th * (ydiff + th1 * (bspl + th * (r4 + th1 * r5))));
      }
      ++next;
    }

    const bool blown = !detail::all_finite(y1) || detail::split_abs(y1).maxCoeff() > opt.clip;
    if (blown) {
      out.meta.diverged = true;
      out.meta.divergence_time = t_new;
      for (auto& s : out.states)
        if (detail::split_abs(s).maxCoeff() > opt.clip) s = clip_state(s);
      const State filled = clip_state(y1);
      while (next < grid.size()) {
        out.states.push_back(filled);
        ++next;
      }
      break;
    }

    t = t_new;
    y = y1;
    k1 = k7;
    const double fac = std::min(fac_max, std::max(0.2, 0.9 * std::pow(std::max(en, 1e-10), -0.2)));
    h *= fac;
    fac_max = 5.0;
  }
  return out;
}

/// Reference solution of x' = g(x) for a one-dimensional periodic field.
inline RealTrajectory integrate_reference(const FourierField1D& field, double x0, const TimeGrid& grid,
                                          double tol = 1e-12) {
  if (!field.real_valued()) throw FieldError("field not real-valued");
  Eigen::VectorXd y0(1);
  y0[0] = x0;
  auto rhs = [&](double, const Eigen::VectorXd& y) {
    Eigen::VectorXd dy(1);
    dy[0] = eval_field_1d(field, y[0]);
    return dy;
  };
  return dopri5(rhs, y0, grid, SolverOptions{tol}, "reference-dopri5");
}

/// Reference solution of x' = g(x) for a quasi-periodic field.
inline RealTrajectory integrate_reference(const QuasiPeriodicField& field, const std::vector<double>& x0,
                                          const TimeGrid& grid, double tol = 1e-12) {
  if (static_cast<int>(x0.size()) != field.d()) throw FieldError("state length does not match field dimension");
  Eigen::VectorXd y0 = Eigen::Map<const Eigen::VectorXd>(x0.data(), static_cast<Eigen::Index>(x0.size()));
  std::vector<double> buf(x0.size());
  auto rhs = [&](double, const Eigen::VectorXd& y) {
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = y[static_cast<Eigen::Index>(i)];
    const std::vector<double> g = eval_field_multi(field, buf);
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size())));
  };
  return dopri5(rhs, y0, grid, SolverOptions{tol}, "reference-dopri5");
}

enum class LinearMethod { rk_adaptive, expm };

inline constexpr std::size_t kExpmMaxDim = 2000;

/// z' = B z, z(0) = z0 for an assembled finite section.
inline ComplexTrajectory integrate_linear(const LiftedSystem& sys, const TimeGrid& grid, double tol = 1e-10,
                                          LinearMethod method = LinearMethod::rk_adaptive) {
  detail::check_tol(tol);
  if (method == LinearMethod::rk_adaptive) {
    auto rhs = [&](double, const Eigen::VectorXcd& z) { return Eigen::VectorXcd(sys.op * z); };
    return dopri5(rhs, sys.z0, grid, SolverOptions{tol}, "linear-dopri5");
  }
  if (sys.dim > kExpmMaxDim) throw std::invalid_argument("expm method limited to dimension 2000");
  ComplexTrajectory out;
  out.grid = grid;
  out.meta.method = "linear-expm";
  out.meta.tol = tol;
  const Eigen::MatrixXcd B = Eigen::MatrixXcd(sys.op);
  for (double t : grid.samples) {
    if (t == 0.0) {
      out.states.push_back(sys.z0);
      continue;
    }
    const Eigen::MatrixXcd E = (B * Complex(t, 0.0)).exp();
    out.states.push_back(E * sys.z0);
  }
  return out;
}

/// x' = A x + a, x(0) = x0_lift. Divergent runs are clipped at 1e12 and flagged.
inline RealTrajectory integrate_classical(const ClassicalSystem& sys, const TimeGrid& grid, double tol = 1e-10) {
  auto rhs = [&](double, const Eigen::VectorXd& x) { return Eigen::VectorXd(sys.A * x + sys.a); };
  SolverOptions opt{tol};
  opt.clip = kClassicalClip;
  try {
    return dopri5(rhs, sys.x0_lift, grid, opt, "classical-dopri5");
  } catch (const IntegrationError& e) {
    // Step-size collapse on a linear system means the state is exploding.
    RealTrajectory out;
    out.grid = grid;
    out.meta.method = "classical-dopri5";
    out.meta.tol = tol;
    out.meta.diverged = true;
    out.meta.divergence_time = e.last_time();
    // Re-run up to the last valid time to recover the prefix.
    std::vector<double> prefix;
    for (double s : grid.samples)
      if (s <= e.last_time()) prefix.push_back(s);
    if (prefix.size() >= 2) {
      auto head = dopri5(rhs, sys.x0_lift, TimeGrid{prefix}, opt, "classical-dopri5");
      out.states = std::move(head.states);
    } else {
      out.states.push_back(sys.x0_lift);
    }
    Eigen::VectorXd filled = Eigen::VectorXd::Constant(sys.N, kClassicalClip);
    while (out.states.size() < grid.size()) out.states.push_back(filled);
    return out;
  }
}

}  // namespace cflin
