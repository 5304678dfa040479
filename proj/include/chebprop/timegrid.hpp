#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "chebprop/common.hpp"
#include "chebprop/fft.hpp"
#include "chebprop/hilbert.hpp"

namespace chebprop {

enum class GridKind { Equidistant, ChebyshevLobatto };

/// Global propagation time grid over [0, T], points stored in ascending order.
/// Equidistant: t_n = n dt with t_{N-1} = T (N points = N-1 steps).
/// ChebyshevLobatto: t_n = (T/2)(1 + cos(n pi/(N-1))), reversed to ascend.
struct TimeGrid {
  GridKind kind = GridKind::Equidistant;
  double total_time = 0.0;
  std::vector<double> points;

  int n_points() const { return static_cast<int>(points.size()); }
  int n_steps() const { return n_points() - 1; }
  double dt() const {
    if (kind != GridKind::Equidistant) throw GridError("dt: grid is not equidistant");
    return points[1] - points[0];
  }
  double step(int n) const { return points[n + 1] - points[n]; }
  double max_step() const {
    double m = 0.0;
    for (int n = 0; n + 1 < n_points(); ++n) m = std::max(m, points[n + 1] - points[n]);
    return m;
  }

  static TimeGrid equidistant(double total_time, int n_points) {
    if (n_points < 2) throw ArgumentError("TimeGrid: need at least 2 points");
    if (!(total_time > 0.0)) throw ArgumentError("TimeGrid: total_time must be > 0");
    TimeGrid g;
    g.kind = GridKind::Equidistant;
    g.total_time = total_time;
    g.points.resize(n_points);
    const double dt = total_time / (n_points - 1);
    for (int n = 0; n < n_points; ++n) g.points[n] = n * dt;
    g.points.back() = total_time;
    return g;
  }

  static TimeGrid equidistant_steps(double dt, int n_steps) {
    if (n_steps < 1) throw ArgumentError("TimeGrid: need at least 1 step");
    return equidistant(dt * n_steps, n_steps + 1);
  }

  static TimeGrid chebyshev_lobatto(double total_time, int n_points) {
    if (n_points < 2) throw ArgumentError("TimeGrid: need at least 2 points");
    if (!(total_time > 0.0)) throw ArgumentError("TimeGrid: total_time must be > 0");
    TimeGrid g;
    g.kind = GridKind::ChebyshevLobatto;
    g.total_time = total_time;
    g.points.resize(n_points);
    const int m = n_points - 1;
    // extended-precision node evaluation, one rounding per point
    const long double t_half = 0.5L * static_cast<long double>(total_time);
    for (int n = 0; n < n_points; ++n) {
      const long double theta = (m - n) * std::numbers::pi_v<long double> / m;
      g.points[n] = static_cast<double>(t_half * (1.0L + std::cos(theta)));
    }
    g.points.front() = 0.0;
    g.points.back() = total_time;
    return g;
  }
};

inline TimeGrid make_chebyshev_grid(double total_time, int n_points) {
  return TimeGrid::chebyshev_lobatto(total_time, n_points);
}

/// State vectors (or scalar series packed as 1-vectors) sampled on a TimeGrid.
struct SampledTrajectory {
  TimeGrid grid;
  std::vector<StateVector> values;

  int dim() const { return values.empty() ? 0 : static_cast<int>(values[0].size()); }
  void validate() const {
    if (static_cast<int>(values.size()) != grid.n_points())
      throw DimensionError("SampledTrajectory: values length != grid points");
  }
};

/// Spectral time derivative on an equidistant grid: DFT over the period T
/// spanned by the first N-1 samples, multiply by (i w_k)^order, transform
/// back. The last node is treated as the periodic image of t = 0. Non-periodic
/// data therefore picks up boundary errors that grow with the derivative
/// order, which is why orders above 2 are rejected.
inline SampledTrajectory fft_derivative(const SampledTrajectory& traj, int order) {
  traj.validate();
  if (traj.grid.kind != GridKind::Equidistant)
    throw GridError("fft_derivative: grid is not equidistant");
  if (order < 1 || order > 2) throw GridError("fft_derivative: order must be 1 or 2");
  const int n = traj.grid.n_points() - 1;  // samples in one period
  if (n < 2) throw GridError("fft_derivative: too few points");
  const int dim = traj.dim();
  const double period = traj.grid.total_time;
  SampledTrajectory out;
  out.grid = traj.grid;
  out.values.assign(traj.values.size(), StateVector::Zero(dim));
  std::vector<Complex> series(n);
  for (int d = 0; d < dim; ++d) {
    for (int j = 0; j < n; ++j) series[j] = traj.values[j][d];
    fft::transform(series, -1);
    for (int k = 0; k < n; ++k) {
      int ks = (2 * k <= n) ? k : k - n;
      if (n % 2 == 0 && k == n / 2 && order % 2 == 1) {
        series[k] = 0.0;  // Nyquist bin has no well-defined odd derivative
        continue;
      }
      const Complex iw = kImag * (2.0 * std::numbers::pi * ks / period);
      series[k] *= (order == 1) ? iw : iw * iw;
    }
    fft::transform(series, +1);
    for (int j = 0; j < n; ++j) out.values[j][d] = series[j] / static_cast<double>(n);
    out.values[n][d] = out.values[0][d];  // periodic image
  }
  return out;
}

namespace detail {

// Chebyshev series coefficients b with f(x) = sum_k b_k T_k(x) from samples at
// the Lobatto extrema x_j = cos(j pi / M), j = 0..M (descending in x).
inline std::vector<Complex> lobatto_to_series(const std::vector<Complex>& samples) {
  const int n = static_cast<int>(samples.size());
  const int m = n - 1;
  std::vector<double> re(n), im(n);
  for (int j = 0; j < n; ++j) {
    re[j] = samples[j].real();
    im[j] = samples[j].imag();
  }
  const auto yre = fft::dct1(re);
  const auto yim = fft::dct1(im);
  std::vector<Complex> b(n);
  for (int k = 0; k < n; ++k) {
    const double s = (k == 0 || k == m) ? 0.5 / m : 1.0 / m;
    b[k] = s * Complex(yre[k], yim[k]);
  }
  return b;
}

// Evaluate sum_k b_k T_k at the Lobatto extrema (inverse of lobatto_to_series).
inline std::vector<Complex> series_to_lobatto(const std::vector<Complex>& b) {
  const int n = static_cast<int>(b.size());
  const int m = n - 1;
  std::vector<double> re(n), im(n);
  for (int k = 0; k < n; ++k) {
    const double s = (k == 0 || k == m) ? 2.0 : 1.0;
    re[k] = s * b[k].real();
    im[k] = s * b[k].imag();
  }
  const auto yre = fft::dct1(re);
  const auto yim = fft::dct1(im);
  std::vector<Complex> out(n);
  for (int j = 0; j < n; ++j) out[j] = 0.5 * Complex(yre[j], yim[j]);
  return out;
}

// Coefficient recurrence for the derivative of a Chebyshev series:
//   d_{M} = 0, d_{M-1} = 2 M b_M, d_k = d_{k+2} + 2 (k+1) b_{k+1}, d_0 halved.
// `scale` carries the chain-rule factor.
template <typename C>
inline std::vector<C> differentiate_series(const std::vector<C>& b, double scale) {
  const int n = static_cast<int>(b.size());
  const int m = n - 1;
  std::vector<C> d(n, C(0.0, 0.0));
  if (m >= 1) d[m - 1] = static_cast<typename C::value_type>(2.0 * m) * b[m];
  for (int k = m - 2; k >= 0; --k) {
    d[k] = d[k + 2] + static_cast<typename C::value_type>(2.0 * (k + 1)) * b[k + 1];
  }
  d[0] *= static_cast<typename C::value_type>(0.5);
  const auto s = static_cast<typename C::value_type>(scale);
  for (auto& v : d) v *= s;
  return d;
}

// Zero the series tail that is indistinguishable from sampling noise. The
// derivative recurrence amplifies mode k by O(k^2) per order, so a stray
// sub-noise spike at high k must not survive; it is told apart from a genuine
// tail mode by decay context. Everything past the last clearly-resolved mode
// (plus a short parity margin) is dropped, as is sub-floor junk in between.
template <typename C>
inline void denoise_series_tail(std::vector<C>& b) {
  using R = typename C::value_type;
  const int n = static_cast<int>(b.size());
  R cmax = 0;
  for (const auto& c : b) cmax = std::max(cmax, std::abs(c));
  const R floor = static_cast<R>(4.0 * std::numeric_limits<double>::epsilon() / std::sqrt(n)) *
                  cmax;
  int live = 0;
  for (int k = 0; k < n; ++k)
    if (std::abs(b[k]) >= 8 * floor) live = k;
  const int cut = std::min(n, live + 3);
  for (int k = cut; k < n; ++k) b[k] = C(0, 0);
  for (int k = 0; k < cut; ++k)
    if (std::abs(b[k]) < floor) b[k] = C(0, 0);
}

// Extended-precision path for modest grids: direct cosine sums keep the
// transform's own rounding well below the sampling noise.
inline std::vector<Complex> lobatto_derivative_ld(const std::vector<Complex>& samples, int order,
                                                  double scale) {
  using CL = std::complex<long double>;
  const int n = static_cast<int>(samples.size());
  const int m = n - 1;
  std::vector<CL> g(n);
  for (int j = 0; j < n; ++j) g[j] = CL(samples[j].real(), samples[j].imag());
  std::vector<CL> b(n);
  const long double pi_m = std::numbers::pi_v<long double> / m;
  for (int k = 0; k <= m; ++k) {
    CL acc = 0.5L * (g[0] + (k % 2 == 0 ? g[m] : -g[m]));
    for (int j = 1; j < m; ++j) acc += g[j] * std::cos(pi_m * j * k);
    b[k] = acc * ((k == 0 || k == m) ? 1.0L / m : 2.0L / m);
  }
  denoise_series_tail(b);
  for (int o = 0; o < order; ++o) b = differentiate_series(b, scale);
  std::vector<Complex> out(n);
  for (int j = 0; j <= m; ++j) {
    CL acc = 0.0L;
    for (int k = 0; k <= m; ++k) acc += b[k] * std::cos(pi_m * j * k);
    out[j] = Complex(static_cast<double>(acc.real()), static_cast<double>(acc.imag()));
  }
  return out;
}

}  // namespace detail

/// Derivative of any order on a Chebyshev-Lobatto grid via the series
/// recurrence; exact for polynomials and boundary-robust.
inline SampledTrajectory chebyshev_derivative(const SampledTrajectory& traj, int order) {
  traj.validate();
  if (traj.grid.kind != GridKind::ChebyshevLobatto)
    throw GridError("chebyshev_derivative: grid is not Chebyshev-Lobatto");
  if (order < 1) throw ArgumentError("chebyshev_derivative: order must be >= 1");
  const int n = traj.grid.n_points();
  const int dim = traj.dim();
  const double scale = 2.0 / traj.grid.total_time;  // dx/dt for x = 2 t/T - 1
  SampledTrajectory out;
  out.grid = traj.grid;
  out.values.assign(traj.values.size(), StateVector::Zero(dim));
  std::vector<Complex> samples(n);
  for (int d = 0; d < dim; ++d) {
    // ascending t -> standard descending-x sample order
    for (int j = 0; j < n; ++j) samples[j] = traj.values[n - 1 - j][d];
    std::vector<Complex> vals;
    if (n <= 2048) {
      vals = detail::lobatto_derivative_ld(samples, order, scale);
    } else {
      auto series = detail::lobatto_to_series(samples);
      detail::denoise_series_tail(series);
      for (int o = 0; o < order; ++o) series = detail::differentiate_series(series, scale);
      vals = detail::series_to_lobatto(series);
    }
    for (int j = 0; j < n; ++j) out.values[n - 1 - j][d] = vals[j];
  }
  return out;
}

/// Derivative dispatch on grid kind.
inline SampledTrajectory derivative(const SampledTrajectory& traj, int order) {
  return traj.grid.kind == GridKind::Equidistant ? fft_derivative(traj, order)
                                                 : chebyshev_derivative(traj, order);
}

/// Barycentric interpolation of a trajectory: Chebyshev weights on Lobatto
/// grids, trigonometric (period T) on equidistant grids. Node queries return
/// the stored sample unchanged.
inline StateVector interpolate(const SampledTrajectory& traj, double t_query) {
  traj.validate();
  const auto& g = traj.grid;
  const double t_tol = 8.0 * std::numeric_limits<double>::epsilon() * g.total_time;
  if (t_query < -t_tol || t_query > g.total_time + t_tol)
    throw ArgumentError("interpolate: query outside [0, T]");
  for (int n = 0; n < g.n_points(); ++n)
    if (std::abs(t_query - g.points[n]) <= t_tol) return traj.values[n];

  const int np = g.n_points();
  if (g.kind == GridKind::ChebyshevLobatto) {
    const double x = 2.0 * t_query / g.total_time - 1.0;
    StateVector num = StateVector::Zero(traj.dim());
    double den = 0.0;
    double sign = 1.0;
    for (int j = 0; j < np; ++j) {
      double w = sign;
      if (j == 0 || j == np - 1) w *= 0.5;
      const double xj = std::cos((np - 1 - j) * std::numbers::pi / (np - 1));
      const double c = w / (x - xj);
      num += c * traj.values[j];
      den += c;
      sign = -sign;
    }
    return num / den;
  }

  // Trigonometric barycentric form over the period T (first N-1 samples).
  const int n = np - 1;
  const double theta = 2.0 * std::numbers::pi * t_query / g.total_time;
  StateVector num = StateVector::Zero(traj.dim());
  double den = 0.0;
  double sign = 1.0;
  const bool even = (n % 2 == 0);
  for (int j = 0; j < n; ++j) {
    const double theta_j = 2.0 * std::numbers::pi * j / n;
    const double half = 0.5 * (theta - theta_j);
    const double c = sign * (even ? (std::cos(half) / std::sin(half)) : (1.0 / std::sin(half)));
    num += c * traj.values[j];
    den += c;
    sign = -sign;
  }
  return num / den;
}

}  // namespace chebprop
