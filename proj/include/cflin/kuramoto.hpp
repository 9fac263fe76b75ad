#pragma once

// First-order Kuramoto model
//   theta_p' = omega_p + (K/d) sum_q sin(theta_q - theta_p),
// its normalisation (zero-mean phases and frequencies, |K| = d) and the
// two-oscillator reduction theta' = omega1 + ktilde sin(2 theta).

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cflin/fourier_field.hpp"

namespace cflin {

struct KuramotoModel {
  int d = 2;
  std::vector<double> omegas;
  double K = 1.0;
  std::vector<double> theta0;

  void validate() const {
    if (d < 2) throw std::invalid_argument("Kuramoto model needs at least two oscillators");
    if (static_cast<int>(omegas.size()) != d || static_cast<int>(theta0.size()) != d)
      throw std::invalid_argument("omegas and theta0 must have length d");
    if (K == 0.0 || !std::isfinite(K)) throw std::invalid_argument("coupling K must be nonzero");
  }
};

struct NormalizedKuramoto {
  KuramotoModel model;
  /// Original time t maps to normalised time t * |K| / d; this is d/|K|.
  double time_scale = 1.0;
  /// -K/d, i.e. +-1 for the normalised model.
  double ktilde = -1.0;
};

inline constexpr double kNormalizationTol = 1e-12;

inline bool is_normalized(const KuramotoModel& m) {
  m.validate();
  const double sum_theta = std::accumulate(m.theta0.begin(), m.theta0.end(), 0.0);
  const double sum_omega = std::accumulate(m.omegas.begin(), m.omegas.end(), 0.0);
  return std::abs(sum_theta) <= kNormalizationTol && std::abs(sum_omega) <= kNormalizationTol &&
         std::abs(std::abs(m.K) - m.d) <= kNormalizationTol;
}

inline NormalizedKuramoto normalize(const KuramotoModel& model) {
  model.validate();
  const int d = model.d;
  const double absK = std::abs(model.K);
  const double mean_theta = std::accumulate(model.theta0.begin(), model.theta0.end(), 0.0) / d;
  const double sum_omega = std::accumulate(model.omegas.begin(), model.omegas.end(), 0.0);
  NormalizedKuramoto out;
  out.model.d = d;
  out.model.K = std::copysign(static_cast<double>(d), model.K);
  out.model.theta0.resize(d);
  out.model.omegas.resize(d);
  for (int p = 0; p < d; ++p) {
    out.model.theta0[p] = model.theta0[p] - mean_theta;
    out.model.omegas[p] = (d * model.omegas[p] - sum_omega) / absK;
  }
  out.time_scale = d / absK;
  out.ktilde = -out.model.K / d;
  return out;
}

/// theta' = omega1 + ktilde sin(2 theta) as a Fourier field.
inline FourierField1D reduced_field(double omega1, double ktilde, double r = 0.5,
                                    std::optional<double> D = std::nullopt) {
  if (std::abs(ktilde) != 1.0) throw std::invalid_argument("unnormalized coupling");
  std::map<int, Complex> g;
  g[0] = omega1;
  g[2] = Complex(0.0, -ktilde / 2);
  g[-2] = Complex(0.0, ktilde / 2);
  return FourierField1D(std::move(g), r, D);
}

struct ReducedKuramoto {
  double omega1 = 0.0;
  double ktilde = 1.0;
  double theta0 = 0.0;
};

/// Two-oscillator reduction; the model must already be normalised.
inline ReducedKuramoto reduce_two_oscillator(const KuramotoModel& model) {
  if (model.d != 2) throw std::invalid_argument("reduction requires d = 2");
  if (!is_normalized(model)) throw std::invalid_argument("model is not normalized");
  return {model.omegas[0], -model.K / 2.0, model.theta0[0]};
}

inline ReducedKuramoto reduce_two_oscillator(const NormalizedKuramoto& model) {
  return reduce_two_oscillator(model.model);
}

struct Equilibria {
  bool divergent = false;
  /// Representatives of the two mod-pi families, each in (-pi, pi/2].
  std::vector<double> representatives;

  /// Distance from theta to the nearest member of the families + pi Z.
  double distance(double theta) const {
    double best = std::numeric_limits<double>::infinity();
    for (double e : representatives) {
      const double r = std::remainder(theta - e, std::numbers::pi);
      best = std::min(best, std::abs(r));
    }
    return best;
  }
};

inline Equilibria equilibria(double omega1, double ktilde) {
  if (std::abs(ktilde) != 1.0) throw std::invalid_argument("unnormalized coupling");
  Equilibria out;
  if (std::abs(omega1) > 1.0) {
    out.divergent = true;
    return out;
  }
  const double a = std::asin(omega1);
  out.representatives = {-ktilde / 2 * a, ktilde / 2 * a - std::numbers::pi / 2};
  return out;
}

/// omega_p + (K/d) sum_q sin(theta_q - theta_p) as a single-frequency quasi-periodic field.
inline QuasiPeriodicField full_rhs(const KuramotoModel& model, double r = 0.5) {
  model.validate();
  const int d = model.d;
  std::map<QPKey, Complex> g;
  const Complex c = model.K / (Complex(0.0, 2.0) * static_cast<double>(d));
  for (int p = 0; p < d; ++p) {
    if (model.omegas[p] != 0.0) g[{p, MultiIndex(d, 0)}] += model.omegas[p];
    for (int q = 0; q < d; ++q) {
      if (q == p) continue;
      MultiIndex up(d, 0);
      up[q] = 1;
      up[p] = -1;
      MultiIndex down(d, 0);
      down[p] = 1;
      down[q] = -1;
      g[{p, up}] += c;
      g[{p, down}] -= c;
    }
  }
  return QuasiPeriodicField(d, {1.0}, std::move(g), r);
}

inline QuasiPeriodicField full_rhs(const NormalizedKuramoto& model, double r = 0.5) {
  return full_rhs(model.model, r);
}

}  // namespace cflin
