#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "chebprop/chebkernel.hpp"
#include "chebprop/common.hpp"
#include "chebprop/hilbert.hpp"
#include "chebprop/inhom.hpp"
#include "chebprop/oracle.hpp"

namespace chebprop::selfcheck {

struct CheckResult {
  std::string name;
  bool pass = false;
  double worst = 0.0;
  double limit = 0.0;
};

struct Options {
  unsigned seed = 12345;
  // Fault injection for testing the harness itself: perturbs one expansion
  // coefficient inside the named check.
  bool corrupt_coefficient = false;
};

namespace detail {

inline DenseMatrix random_hermitian(std::mt19937_64& rng, int n, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  DenseMatrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = Complex(g(rng), g(rng));
  return 0.5 * (m + DenseMatrix(m.adjoint()));
}

inline StateVector random_state(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g(0.0, 1.0);
  StateVector v(n);
  for (int i = 0; i < n; ++i) v[i] = Complex(g(rng), g(rng));
  return v / norm_of(v);
}

}  // namespace detail

/// Oracle-backed invariant suite behind the `selfcheck` CLI verb.
inline std::vector<CheckResult> run_all(const Options& opt = {}) {
  std::vector<CheckResult> results;
  std::mt19937_64 rng(opt.seed);

  // Analytic (Bessel) vs cosine-transform coefficients for the exponential.
  {
    CheckResult r{"bessel-vs-dct-coefficients", true, 0.0, 1e-12};
    for (double w : {0.1, 1.0, 10.0, 50.0}) {
      SpectralBounds bounds{-1.0, 1.0};
      const double t = 2.0 * w / bounds.delta();
      auto analytic = coefficients_analytic_f0(1 << 16, bounds, t, 1e-14);
      if (opt.corrupt_coefficient && w == 10.0 && analytic.coeffs.size() > 3)
        analytic.coeffs[3] += 1e-6;
      int n_pts = 64;
      while (n_pts < 2 * (w + 40.0)) n_pts *= 2;
      const auto numeric = coefficients_numeric(FmSpec(0, t), bounds, n_pts, 1e-14);
      const auto n_common = std::min(analytic.coeffs.size(), numeric.coeffs.size());
      for (std::size_t n = 0; n < n_common; ++n)
        r.worst = std::max(r.worst, std::abs(analytic.phase_external * analytic.coeffs[n] -
                                             numeric.coeffs[n]));
    }
    r.pass = r.worst < r.limit;
    results.push_back(r);
  }

  // Order-m step against the one-expansion-per-term form of the solution.
  {
    CheckResult r{"alt-form-equivalence", true, 0.0, 1e-11};
    for (int m = 1; m <= 4; ++m) {
      const auto h = Hamiltonian::dense(detail::random_hermitian(rng, 6, 0.5));
      const StateVector psi = detail::random_state(rng, 6);
      PhiCoefficients phis;
      for (int j = 0; j < m; ++j) phis.push_back(detail::random_state(rng, 6));
      const double dt = 0.3;
      const auto bounds = h.spectral_bounds(0.0);
      PropagatorConfig cfg;
      cfg.m = m;
      cfg.grid = TimeGrid::equidistant(1.0, 2);
      const auto exp_fm = build_expansion(FmSpec(m, dt), bounds, 1e-13);
      const StateVector a = propagate_step(psi, phis, h, 0.0, dt, exp_fm);
      const StateVector b = formal_solution_alt(psi, phis, h, 0.0, dt, bounds, cfg);
      r.worst = std::max(r.worst, (a - b).cwiseAbs().maxCoeff());
    }
    r.pass = r.worst < r.limit;
    results.push_back(r);
  }

  // Chebyshev-to-monomial transform identity at random points.
  {
    CheckResult r{"cheb-to-taylor-transform", true, 0.0, 1e-12};
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int degree : {1, 3, 7, 10}) {
      std::vector<StateVector> a;
      for (int k = 0; k <= degree; ++k) a.push_back(detail::random_state(rng, 3));
      const auto b = cheb_to_monomial(a);
      for (int trial = 0; trial < 25; ++trial) {
        const double x = u(rng);
        StateVector lhs = StateVector::Zero(3);
        double tkm1 = 1.0, tk = x;
        for (int k = 0; k <= degree; ++k) {
          const double tval = (k == 0) ? 1.0 : (k == 1 ? x : tk);
          if (k >= 2) {
            const double next = 2.0 * x * tk - tkm1;
            tkm1 = tk;
            tk = next;
          }
          lhs += tval * a[k];
        }
        StateVector rhs = StateVector::Zero(3);
        double xj = 1.0;  // x^j / j!
        for (int j = 0; j <= degree; ++j) {
          rhs += xj * b[j];
          xj *= x / (j + 1);
        }
        r.worst = std::max(r.worst, (lhs - rhs).cwiseAbs().maxCoeff());
      }
    }
    r.pass = r.worst < r.limit;
    results.push_back(r);
  }

  // Polynomial sources of degree < m are handled exactly.
  {
    CheckResult r{"polynomial-source-exactness", true, 0.0, 1e-11};
    for (int m = 1; m <= 3; ++m) {
      const auto h = Hamiltonian::dense(detail::random_hermitian(rng, 5, 0.6));
      const StateVector psi = detail::random_state(rng, 5);
      std::vector<StateVector> coef;
      for (int j = 0; j < m; ++j) coef.push_back(detail::random_state(rng, 5));
      auto poly = [&](double tau) {
        StateVector v = StateVector::Zero(5);
        double p = 1.0;
        for (int j = 0; j < m; ++j) {
          v += p * coef[j];
          p *= tau / (j + 1);
        }
        return v;
      };
      const double dt = 0.4;
      const auto exp_fm = build_expansion(FmSpec(m, dt), h.spectral_bounds(0.0), 1e-13);
      const StateVector got = propagate_step(psi, coef, h, 0.0, dt, exp_fm);
      const StateVector ref = oracle::duhamel_reference(psi, poly, h, 0.0, dt);
      r.worst = std::max(r.worst, (got - ref).cwiseAbs().maxCoeff());
    }
    r.pass = r.worst < r.limit;
    results.push_back(r);
  }

  // Homogeneous norm conservation over many steps.
  {
    CheckResult r{"norm-conservation", true, 0.0, 1e-12};
    const auto h = Hamiltonian::dense(detail::random_hermitian(rng, 6, 0.4));
    StateVector psi = detail::random_state(rng, 6);
    const auto exp_f0 = coefficients_analytic_f0(1 << 12, h.spectral_bounds(0.0), 0.5, 1e-14);
    for (int step = 0; step < 1000; ++step) psi = apply_expansion(exp_f0, h, 0.0, psi);
    r.worst = std::abs(norm_of(psi) - 1.0);
    r.pass = r.worst < r.limit;
    results.push_back(r);
  }

  // The quadrature reference is self-consistent under node doubling.
  {
    CheckResult r{"duhamel-self-consistency", true, 0.0, 1e-12};
    const auto h = Hamiltonian::dense(detail::random_hermitian(rng, 4, 0.8));
    const StateVector psi = detail::random_state(rng, 4);
    auto phi = [](double tau) {
      StateVector v(4);
      for (int i = 0; i < 4; ++i)
        v[i] = Complex(std::cos((i + 1) * tau), std::sin(0.7 * (i + 1) * tau));
      return v;
    };
    oracle::OracleConfig a{16, 4};
    oracle::OracleConfig b{16, 8};
    const StateVector ra = oracle::duhamel_reference(psi, phi, h, 0.0, 1.0, a);
    const StateVector rb = oracle::duhamel_reference(psi, phi, h, 0.0, 1.0, b);
    r.worst = (ra - rb).cwiseAbs().maxCoeff();
    r.pass = r.worst < r.limit;
    results.push_back(r);
  }

  return results;
}

}  // namespace chebprop::selfcheck
