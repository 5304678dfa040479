#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "chebprop/common.hpp"
#include "chebprop/fft.hpp"
#include "chebprop/hilbert.hpp"

namespace chebprop {

/// Scalar propagator function of order m over a step of duration t:
///   f_0(z) = exp(-i z t)
///   f_m(z) = (-i z)^{-m} (exp(-i z t) - sum_{j<m} (-i z t)^j / j!),  m >= 1.
/// Below |z t| <= eps_switch the defining expression cancels catastrophically
/// and the series  f_m(z) = t^m sum_j (-i z t)^j / (j+m)!  is used instead.
struct FmSpec {
  int m = 0;
  double t = 0.0;
  double eps_switch = 0.5;

  FmSpec() = default;
  FmSpec(int order, double step, double eps = 0.5) : m(order), t(step), eps_switch(eps) {
    if (m < 0) throw ArgumentError("FmSpec: order must be >= 0");
    if (!(eps_switch > 0.0)) throw ArgumentError("FmSpec: eps_switch must be > 0");
  }
};

inline Complex fm_scalar_taylor(const FmSpec& spec, Complex z) {
  const Complex w = -kImag * z * spec.t;
  double tm = 1.0;  // t^m / m!
  for (int j = 1; j <= spec.m; ++j) tm *= spec.t / j;
  Complex term = tm;
  Complex sum = term;
  for (int j = 1; j <= 40; ++j) {
    term *= w / static_cast<double>(j + spec.m);
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

inline Complex fm_scalar_direct(const FmSpec& spec, Complex z) {
  const Complex miz = -kImag * z;
  Complex series = 0.0;
  Complex term = 1.0;
  for (int j = 0; j < spec.m; ++j) {
    series += term;
    term *= miz * spec.t / static_cast<double>(j + 1);
  }
  return (std::exp(miz * spec.t) - series) / std::pow(miz, spec.m);
}

inline Complex fm_scalar(const FmSpec& spec, Complex z) {
  if (spec.m == 0) return std::exp(-kImag * z * spec.t);
  if (std::abs(z * spec.t) > spec.eps_switch) return fm_scalar_direct(spec, z);
  return fm_scalar_taylor(spec, z);
}

/// J_0(x) .. J_{n_max}(x) by Miller's downward recurrence, normalized with
/// J_0 + 2 sum_k J_{2k} = 1. Accurate to machine precision for the orders kept.
inline std::vector<double> bessel_jn_sequence(int n_max, double x) {
  std::vector<double> out(static_cast<std::size_t>(n_max) + 1, 0.0);
  const double ax = std::abs(x);
  if (ax < 1e-300) {
    out[0] = 1.0;
    return out;
  }
  int start = std::max(n_max, static_cast<int>(ax)) +
              static_cast<int>(10.0 * std::cbrt(ax)) + 50;
  if (start % 2) ++start;
  double jkp1 = 0.0;
  double jk = 1e-280;
  double norm = 0.0;
  for (int k = start; k >= 1; --k) {
    const double jkm1 = (2.0 * k / ax) * jk - jkp1;
    jkp1 = jk;
    jk = jkm1;
    const int n = k - 1;
    if (n <= n_max) out[n] = jk;
    if (n % 2 == 0) norm += (n == 0) ? jk : 2.0 * jk;
    if (std::abs(jk) > 1e270) {
      jk *= 1e-270;
      jkp1 *= 1e-270;
      norm *= 1e-270;
      for (auto& v : out) v *= 1e-270;
    }
  }
  for (auto& v : out) v /= norm;
  if (x < 0.0)
    for (int n = 1; n <= n_max; n += 2) out[n] = -out[n];
  return out;
}

/// Truncated expansion f_m(H) ~ phase_external * sum_n coeffs[n] P_n(H_norm),
/// with H_norm built from `bounds`. coeffs[degree()] is below the build tolerance.
struct ChebyshevExpansion {
  std::vector<Complex> coeffs;
  SpectralBounds bounds;
  double t = 0.0;
  int m = 0;
  Complex phase_external{1.0, 0.0};

  int degree() const { return static_cast<int>(coeffs.size()) - 1; }
};

namespace detail {

// Earliest index the truncation scan may stop at: past the Bessel-like
// oscillatory regime |n| <= |w| the coefficients decay monotonically.
inline int truncation_floor(double w) { return static_cast<int>(std::ceil(std::abs(w))) + 1; }

}  // namespace detail

/// Coefficients for f_0 = exp(-i H t) via Bessel functions:
///   a_n = (2 - d_{n0}) (-i)^n J_n(dE t / 2),
/// with the spectral shift kept as the external phase exp(-i (dE/2 + E_min) t).
inline ChebyshevExpansion coefficients_analytic_f0(int n_max, const SpectralBounds& bounds,
                                                   double t, double tolerance = 1e-12) {
  if (n_max < 1) throw ArgumentError("coefficients_analytic_f0: n_max must be >= 1");
  if (!(bounds.delta() > 0.0))
    throw NumericalError("coefficients_analytic_f0: degenerate spectral range");
  ChebyshevExpansion exp;
  exp.bounds = bounds;
  exp.t = t;
  exp.m = 0;
  exp.phase_external = std::exp(-kImag * (0.5 * bounds.delta() + bounds.e_min) * t);
  const double w = 0.5 * bounds.delta() * t;
  if (std::abs(w) < 1e-300) {
    exp.coeffs = {Complex(1.0, 0.0), Complex(0.0, 0.0)};
    return exp;
  }
  const int floor_n = detail::truncation_floor(w);
  const int scan_max = std::min(n_max, floor_n + 200);
  const auto jn = bessel_jn_sequence(scan_max, w);
  Complex in_pow{1.0, 0.0};  // (-i)^n
  std::vector<Complex> coeffs;
  coeffs.reserve(scan_max + 1);
  double last = 1.0;
  for (int n = 0; n <= scan_max; ++n) {
    const double factor = (n == 0) ? 1.0 : 2.0;
    coeffs.push_back(factor * in_pow * jn[n]);
    in_pow *= -kImag;
    last = std::abs(coeffs.back());
    if (n >= std::max(1, floor_n) && last < tolerance) {
      exp.coeffs = std::move(coeffs);
      return exp;
    }
  }
  throw TruncationError("coefficients_analytic_f0: tolerance not reached within n_max", last);
}

/// Coefficients for general f_m by sampling at the Chebyshev roots
/// x_k = cos(pi (k+1/2)/N) of the spectral interval and a fast cosine
/// transform, a_n = (2 - d_{n0})/N sum_k g(x_k) cos(n theta_k). The affine
/// spectral map is folded into the sampled function, so phase_external = 1.
inline ChebyshevExpansion coefficients_numeric(const FmSpec& spec, const SpectralBounds& bounds,
                                               int n_points, double tolerance) {
  if (n_points < 2) throw ArgumentError("coefficients_numeric: n_points must be >= 2");
  if (!(tolerance > 0.0)) throw ArgumentError("coefficients_numeric: tolerance must be > 0");
  if (!(bounds.delta() > 0.0))
    throw NumericalError("coefficients_numeric: degenerate spectral range");
  const int n = n_points;
  std::vector<double> re(n), im(n);
  for (int k = 0; k < n; ++k) {
    const double theta = std::numbers::pi * (k + 0.5) / n;
    const double x = std::cos(theta);
    const double e = bounds.e_min + 0.5 * bounds.delta() * (x + 1.0);
    const Complex g = fm_scalar(spec, e);
    re[k] = g.real();
    im[k] = g.imag();
  }
  const auto cre = fft::dct2(re);  // REDFT10 = 2 * the cosine sum
  const auto cim = fft::dct2(im);
  const double w = 0.5 * bounds.delta() * spec.t;
  const int floor_n = std::min(detail::truncation_floor(w), n - 1);
  std::vector<Complex> coeffs;
  coeffs.reserve(n);
  double last = 0.0;
  for (int k = 0; k < n; ++k) {
    const double factor = (k == 0) ? 0.5 / n : 1.0 / n;
    coeffs.push_back(factor * Complex(cre[k], cim[k]));
    last = std::abs(coeffs.back());
    if (k >= std::max(1, floor_n) && last < tolerance) {
      ChebyshevExpansion exp;
      exp.bounds = bounds;
      exp.t = spec.t;
      exp.m = spec.m;
      coeffs.resize(k + 1);
      exp.coeffs = std::move(coeffs);
      return exp;
    }
  }
  throw TruncationError("coefficients_numeric: tolerance not reached; increase n_points", last);
}

/// Numeric coefficients with automatic sample doubling until the truncation
/// tolerance is met. m = 0 takes the analytic Bessel route.
inline ChebyshevExpansion build_expansion(const FmSpec& spec, const SpectralBounds& bounds,
                                          double tolerance, int n_limit = (1 << 18)) {
  if (spec.m == 0) return coefficients_analytic_f0(n_limit, bounds, spec.t, tolerance);
  const double w = std::abs(0.5 * bounds.delta() * spec.t);
  int n = 64;
  while (n < 2.0 * (w + 40.0)) n *= 2;
  for (; n <= n_limit; n *= 2) {
    try {
      return coefficients_numeric(spec, bounds, n, tolerance);
    } catch (const TruncationError&) {
      if (2 * n > n_limit) throw;
    }
  }
  throw TruncationError("build_expansion: sample limit reached", 0.0);
}

/// Pad (with zeros) or cut the coefficient list to the given degree.
/// Used by cost studies that pin the recursion length.
inline ChebyshevExpansion with_fixed_degree(ChebyshevExpansion exp, int degree) {
  if (degree < 0) throw ArgumentError("with_fixed_degree: degree must be >= 0");
  exp.coeffs.resize(static_cast<std::size_t>(degree) + 1, Complex(0.0, 0.0));
  return exp;
}

/// Accumulate phase * sum_n a_n P_n(H_norm) v through the Chebyshev operator
/// recursion. Consumes exactly degree() Hamiltonian applications.
inline StateVector apply_expansion(const ChebyshevExpansion& exp, const Hamiltonian& h,
                                   double field, const StateVector& v) {
  if (v.size() != h.dim()) throw DimensionError("apply_expansion: dimension mismatch");
  if (exp.coeffs.empty()) throw ArgumentError("apply_expansion: empty expansion");
  const auto& a = exp.coeffs;
  StateVector prev = v;  // P_0(H_norm) v
  StateVector acc = a[0] * prev;
  if (a.size() > 1) {
    StateVector cur = h.apply_normalized(exp.bounds, v, field);  // P_1(H_norm) v
    acc += a[1] * cur;
    for (std::size_t n = 2; n < a.size(); ++n) {
      StateVector next = 2.0 * h.apply_normalized(exp.bounds, cur, field) - prev;
      acc += a[n] * next;
      prev = std::move(cur);
      cur = std::move(next);
    }
  }
  return exp.phase_external * acc;
}

}  // namespace chebprop
