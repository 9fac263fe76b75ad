#pragma once

// Fourier representation of periodic and quasi-periodic vector fields.
//
// A one-dimensional field g(x) = sum_n g_n e^{inx} is stored as a finite
// frequency -> coefficient map together with a decay envelope (D, r) that
// certifies |g_n| <= D r^{|n|}. The quasi-periodic generalisation stores
// g_{p; a_1..a_L} for a d-dimensional state and L fundamental frequencies.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cflin {

using Complex = std::complex<double>;
using MultiIndex = std::vector<int>;

class FieldError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Envelope {
  double D = 0.0;
  double r = 0.5;
};

/// Result of fitting the envelope constant for a fixed decay rate.
/// `empty` is set when the field has no stored coefficients (D is then 0).
struct EnvelopeFit {
  double D = 0.0;
  bool empty = false;
};

enum class Reality { required, allow_complex };

namespace detail {

inline bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

inline bool conj_close(Complex a, Complex b) {
  const double scale = 1.0 + std::max(std::abs(a), std::abs(b));
  return std::abs(a - std::conj(b)) <= 1e-12 * scale;
}

inline void check_rate(double r) {
  if (!(r > 0.0 && r < 1.0)) throw FieldError("envelope rate r must lie in (0, 1)");
}

// Relative slack used when validating a user-supplied envelope constant.
inline constexpr double kEnvelopeSlack = 1e-12;

}  // namespace detail

/// Periodic scalar field on the real line, finitely supported in frequency.
class FourierField1D {
 public:
  FourierField1D() = default;

  /// `D` empty means "fit the smallest D for this r".
  explicit FourierField1D(std::map<int, Complex> coeffs, double r = 0.5,
                          std::optional<double> D = std::nullopt,
                          Reality reality = Reality::required)
      : coeffs_(std::move(coeffs)) {
    detail::check_rate(r);
    for (const auto& [n, g] : coeffs_) {
      if (!detail::finite(g)) throw FieldError("non-finite coefficient at n=" + std::to_string(n));
    }
    std::erase_if(coeffs_, [](const auto& kv) { return kv.second == Complex{}; });

    real_valued_ = true;
    for (const auto& [n, g] : coeffs_) {
      if (!detail::conj_close(g, coefficient(-n))) {
        real_valued_ = false;
        break;
      }
    }
    if (!real_valued_ && reality == Reality::required) throw FieldError("field not real-valued");

    envelope_.r = r;
    const double fitted = fit_D(r);
    if (D) {
      if (!(*D > 0.0)) throw FieldError("envelope constant D must be positive");
      if (fitted > *D * (1.0 + detail::kEnvelopeSlack))
        throw FieldError("coefficients violate envelope |g_n| <= D r^|n|");
      envelope_.D = *D;
    } else {
      envelope_.D = fitted;
    }
  }

  const std::map<int, Complex>& coeffs() const { return coeffs_; }
  const Envelope& envelope() const { return envelope_; }
  bool real_valued() const { return real_valued_; }

  Complex coefficient(int n) const {
    auto it = coeffs_.find(n);
    return it == coeffs_.end() ? Complex{} : it->second;
  }

  /// Largest |n| with a stored coefficient.
  int max_frequency() const {
    int s = 0;
    for (const auto& [n, g] : coeffs_) s = std::max(s, std::abs(n));
    return s;
  }

  /// max_n |g_n| r^{-|n|}
  double fit_D(double r) const {
    detail::check_rate(r);
    double D = 0.0;
    for (const auto& [n, g] : coeffs_) D = std::max(D, std::abs(g) * std::pow(r, -std::abs(n)));
    return D;
  }

 private:
  std::map<int, Complex> coeffs_;
  Envelope envelope_;
  bool real_valued_ = true;
};

/// Key of a quasi-periodic coefficient: component p (0-based) and the L
/// frequency vectors alpha_1..alpha_L concatenated into one L*d vector.
struct QPKey {
  int p = 0;
  MultiIndex alphas;

  friend auto operator<=>(const QPKey&, const QPKey&) = default;
};

/// d-dimensional quasi-periodic field with fundamental frequencies tau_1..tau_L.
class QuasiPeriodicField {
 public:
  QuasiPeriodicField() = default;

  QuasiPeriodicField(int d, std::vector<double> taus, std::map<QPKey, Complex> coeffs,
                     double r = 0.5, std::optional<double> D = std::nullopt)
      : d_(d), taus_(std::move(taus)), coeffs_(std::move(coeffs)) {
    if (d_ < 1) throw FieldError("state dimension d must be positive");
    if (taus_.empty()) throw FieldError("at least one fundamental frequency required");
    for (std::size_t i = 0; i < taus_.size(); ++i) {
      if (!(taus_[i] > 0.0) || !std::isfinite(taus_[i]))
        throw FieldError("fundamental frequencies must be positive");
      for (std::size_t j = 0; j < i; ++j)
        if (taus_[i] == taus_[j]) throw FieldError("fundamental frequencies must be distinct");
    }
    detail::check_rate(r);
    const std::size_t width = taus_.size() * static_cast<std::size_t>(d_);
    for (const auto& [key, g] : coeffs_) {
      if (key.p < 0 || key.p >= d_) throw FieldError("coefficient component index out of range");
      if (key.alphas.size() != width) throw FieldError("coefficient frequency vector has wrong length");
      if (!detail::finite(g)) throw FieldError("non-finite coefficient");
    }
    std::erase_if(coeffs_, [](const auto& kv) { return kv.second == Complex{}; });
    for (const auto& [key, g] : coeffs_) {
      QPKey mirror{key.p, key.alphas};
      for (int& a : mirror.alphas) a = -a;
      if (!detail::conj_close(g, coefficient(mirror))) throw FieldError("field not real-valued");
    }

    envelope_.r = r;
    const double fitted = fit_D(r);
    if (D) {
      if (!(*D > 0.0)) throw FieldError("envelope constant D must be positive");
      if (fitted > *D * (1.0 + detail::kEnvelopeSlack))
        throw FieldError("coefficients violate the graded decay condition");
      envelope_.D = *D;
    } else {
      envelope_.D = fitted;
    }
  }

  int d() const { return d_; }
  int L() const { return static_cast<int>(taus_.size()); }
  const std::vector<double>& taus() const { return taus_; }
  const std::map<QPKey, Complex>& coeffs() const { return coeffs_; }
  const Envelope& envelope() const { return envelope_; }

  Complex coefficient(const QPKey& key) const {
    auto it = coeffs_.find(key);
    return it == coeffs_.end() ? Complex{} : it->second;
  }

  /// sup_p sum_{|alpha_1|+..+|alpha_L| = k} |g_{p;alpha}| for every grade present.
  std::map<int, double> graded_mass() const {
    std::map<std::pair<int, int>, double> per;  // (grade, p) -> mass
    for (const auto& [key, g] : coeffs_) {
      int k = 0;
      for (int a : key.alphas) k += std::abs(a);
      per[{k, key.p}] += std::abs(g);
    }
    std::map<int, double> out;
    for (const auto& [kp, mass] : per) out[kp.first] = std::max(out[kp.first], mass);
    return out;
  }

  /// Smallest D with graded_mass(k) <= 2^d D r^k / (tau_1 + .. + tau_L).
  double fit_D(double r) const {
    detail::check_rate(r);
    double tau_sum = 0.0;
    for (double t : taus_) tau_sum += t;
    double D = 0.0;
    for (const auto& [k, mass] : graded_mass())
      D = std::max(D, tau_sum * mass / (std::ldexp(1.0, d_) * std::pow(r, k)));
    return D;
  }

 private:
  int d_ = 1;
  std::vector<double> taus_;
  std::map<QPKey, Complex> coeffs_;
  Envelope envelope_;
};

/// Views a single-frequency one-dimensional field (tau = 1) in quasi-periodic form.
inline QuasiPeriodicField as_quasi_periodic(const FourierField1D& field) {
  std::map<QPKey, Complex> coeffs;
  for (const auto& [n, g] : field.coeffs()) coeffs[{0, {n}}] = g;
  return QuasiPeriodicField(1, {1.0}, std::move(coeffs), field.envelope().r);
}

inline double eval_field_1d(const FourierField1D& field, double x) {
  if (!field.real_valued()) throw FieldError("field not real-valued");
  Complex sum{};
  for (const auto& [n, g] : field.coeffs()) sum += g * std::polar(1.0, n * x);
  return sum.real();
}

inline std::vector<double> eval_field_multi(const QuasiPeriodicField& field,
                                            const std::vector<double>& x) {
  const int d = field.d();
  if (static_cast<int>(x.size()) != d) throw FieldError("state length does not match field dimension");
  const auto& taus = field.taus();
  std::vector<Complex> acc(d);
  for (const auto& [key, g] : field.coeffs()) {
    double phase = 0.0;
    for (std::size_t l = 0; l < taus.size(); ++l)
      for (int q = 0; q < d; ++q) phase += taus[l] * key.alphas[l * d + q] * x[q];
    acc[key.p] += g * std::polar(1.0, phase);
  }
  std::vector<double> out(d);
  for (int p = 0; p < d; ++p) out[p] = acc[p].real();
  return out;
}

inline EnvelopeFit fit_envelope(const FourierField1D& field, double r) {
  return {field.fit_D(r), field.coeffs().empty()};
}

inline EnvelopeFit fit_envelope(const QuasiPeriodicField& field, double r) {
  return {field.fit_D(r), field.coeffs().empty()};
}

struct MaclaurinCoeffs {
  std::vector<double> c;
  /// (2D/r) sum_{m>M} (rho/ln(1/r))^m / ln(1/r) evaluated at rho = ln(1/r)/2.
  double truncation_tail = 0.0;
  /// |c_0| <= D(1+r)/(1-r) and |c_m| <= (2D/r) ln(1/r)^{-m-1} hold for all m.
  bool within_bounds = true;

  int order() const { return static_cast<int>(c.size()) - 1; }
};

/// Bound on |sum_{m>M} c_m x^m| implied by the envelope, valid for |x| < ln(1/r).
inline double maclaurin_tail_bound(const Envelope& env, int M, double x) {
  const double lam = std::log(1.0 / env.r);
  const double q = std::abs(x) / lam;
  if (q >= 1.0) return std::numeric_limits<double>::infinity();
  return 2.0 * env.D / (env.r * lam) * std::pow(q, M + 1) / (1.0 - q);
}

/// c_m = (1/m!) sum_n (in)^m g_n, exact over the stored support.
inline MaclaurinCoeffs maclaurin_from_fourier(const FourierField1D& field, int M) {
  if (M < 1) throw FieldError("Maclaurin order must be at least 1");
  MaclaurinCoeffs out;
  out.c.assign(M + 1, 0.0);
  const Envelope& env = field.envelope();
  const double lam = std::log(1.0 / env.r);

  // g_n (in)^m / m! is accumulated multiplicatively per frequency.
  struct Term {
    int n;
    Complex value;
    double magnitude;
  };
  std::vector<Term> terms;
  for (const auto& [n, g] : field.coeffs()) terms.push_back({n, g, std::abs(g)});

  for (int m = 0; m <= M; ++m) {
    Complex sum{};
    double scale = 0.0;
    for (Term& t : terms) {
      if (m > 0) {
        t.value *= Complex(0.0, t.n) / static_cast<double>(m);
        t.magnitude *= std::abs(t.n) / static_cast<double>(m);
      }
      sum += t.value;
      scale += t.magnitude;
    }
    if (std::abs(sum.imag()) > 1e-10 * std::max(1.0, scale)) throw FieldError("field not real-valued");
    out.c[m] = sum.real();

    const double bound = m == 0 ? env.D * (1.0 + env.r) / (1.0 - env.r)
                                : 2.0 * env.D / env.r * std::pow(lam, -m - 1);
    if (std::abs(out.c[m]) > bound * (1.0 + 1e-12) + 1e-300) out.within_bounds = false;
  }
  out.truncation_tail = maclaurin_tail_bound(env, M, 0.5 * lam);
  return out;
}

/// Field of the extended state, expanded over nonnegative frequency vectors only.
/// Stored as gamma -> (j -> f_{j;gamma}), j 0-based in [0, m).
struct ExtendedField {
  int m = 0;
  std::map<MultiIndex, std::map<int, Complex>> fcoeffs;

  Complex coefficient(int j, const MultiIndex& gamma) const {
    auto it = fcoeffs.find(gamma);
    if (it == fcoeffs.end()) return {};
    auto jt = it->second.find(j);
    return jt == it->second.end() ? Complex{} : jt->second;
  }
};

/// Emits f_{j;gamma} = (-1)^s tau_l g_{p;alpha} at j = s*L*d + l*d + p (0-based l, p)
/// with gamma = [(alpha_1)_+ .. (alpha_L)_+, (alpha_1)_- .. (alpha_L)_-].
inline ExtendedField extend_field(const QuasiPeriodicField& field) {
  const int d = field.d();
  const int L = field.L();
  ExtendedField ext;
  ext.m = 2 * d * L;
  for (const auto& [key, g] : field.coeffs()) {
    MultiIndex gamma(ext.m, 0);
    for (int i = 0; i < d * L; ++i) {
      gamma[i] = std::max(key.alphas[i], 0);
      gamma[d * L + i] = std::max(-key.alphas[i], 0);
    }
    auto& slot = ext.fcoeffs[gamma];
    for (int l = 0; l < L; ++l) {
      for (int s = 0; s < 2; ++s) {
        const int j = s * L * d + l * d + key.p;
        slot[j] += (s == 0 ? 1.0 : -1.0) * field.taus()[l] * g;
      }
    }
  }
  for (auto& [gamma, row] : ext.fcoeffs) std::erase_if(row, [](const auto& kv) { return kv.second == Complex{}; });
  std::erase_if(ext.fcoeffs, [](const auto& kv) { return kv.second.empty(); });
  return ext;
}

/// sum_gamma f_{j;gamma} e^{i gamma^T xt} for every j.
inline std::vector<Complex> eval_extended(const ExtendedField& ext, const std::vector<double>& xt) {
  if (static_cast<int>(xt.size()) != ext.m) throw FieldError("extended state length mismatch");
  std::vector<Complex> out(ext.m);
  for (const auto& [gamma, row] : ext.fcoeffs) {
    double phase = 0.0;
    for (int i = 0; i < ext.m; ++i) phase += gamma[i] * xt[i];
    const Complex e = std::polar(1.0, phase);
    for (const auto& [j, f] : row) out[j] += f * e;
  }
  return out;
}

}  // namespace cflin
