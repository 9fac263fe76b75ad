#pragma once

// Classical Carleman linearization on the monomials x, x^2, .., x^N.
//
// Rows and columns are 1-based in the comments below (n, n' = 1..N) and
// 0-based in storage. Entry (n, n') is n c_{n'-n+1} for n' >= n-1, which
// makes A upper Hessenberg; the drift is [c_0, 0, .., 0].

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "cflin/fourier_field.hpp"

namespace cflin {

struct ClassicalSystem {
  int N = 0;
  Eigen::MatrixXd A;
  Eigen::VectorXd a;
  Eigen::VectorXd x0_lift;
};

/// [x0, x0^2, .., x0^N]
inline Eigen::VectorXd monomial_lift(double x0, int N) {
  Eigen::VectorXd v(N);
  double p = 1.0;
  for (int k = 0; k < N; ++k) {
    p *= x0;
    v[k] = p;
  }
  return v;
}

inline ClassicalSystem build_classical(const MaclaurinCoeffs& c, double x0, int N) {
  if (N < 1) throw std::invalid_argument("section order N must be at least 1");
  if (c.order() < N) throw std::invalid_argument("insufficient Maclaurin order");
  ClassicalSystem sys;
  sys.N = N;
  sys.A = Eigen::MatrixXd::Zero(N, N);
  for (int n = 1; n <= N; ++n) {
    for (int np = std::max(1, n - 1); np <= N; ++np) sys.A(n - 1, np - 1) = n * c.c[np - n + 1];
  }
  sys.a = Eigen::VectorXd::Zero(N);
  sys.a[0] = c.c[0];
  sys.x0_lift = monomial_lift(x0, N);
  return sys;
}

/// Closed form for theta' = omega1 + ktilde sin(2 theta).
inline ClassicalSystem build_classical_kuramoto(double omega1, double ktilde, double x0, int N) {
  if (N < 1) throw std::invalid_argument("section order N must be at least 1");
  if (std::abs(ktilde) != 1.0) throw std::invalid_argument("unnormalized coupling");
  ClassicalSystem sys;
  sys.N = N;
  sys.A = Eigen::MatrixXd::Zero(N, N);
  for (int n = 1; n <= N; ++n) {
    if (n >= 2) sys.A(n - 1, n - 2) = omega1 * n;
    // n' - n even and inside [0, N-1]
    for (int gap = 0; gap <= N - 1 && n + gap <= N; gap += 2) {
      double factorial = 1.0;
      for (int i = 2; i <= gap + 1; ++i) factorial *= i;
      const double sign = (gap / 2) % 2 == 0 ? 1.0 : -1.0;
      sys.A(n - 1, n + gap - 1) = ktilde * n * std::ldexp(1.0, gap + 1) * sign / factorial;
    }
  }
  sys.a = Eigen::VectorXd::Zero(N);
  sys.a[0] = omega1;
  sys.x0_lift = monomial_lift(x0, N);
  return sys;
}

}  // namespace cflin
