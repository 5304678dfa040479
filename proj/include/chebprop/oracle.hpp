#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "chebprop/chebkernel.hpp"
#include "chebprop/common.hpp"
#include "chebprop/hilbert.hpp"
#include "chebprop/inhom.hpp"
#include "chebprop/timegrid.hpp"

// Brute-force reference solvers for validating the propagators at small scale.
// Nothing here is used on any production path.
namespace chebprop::oracle {

struct OracleConfig {
  int quadrature_order = 16;  // Gauss-Legendre nodes per substep
  int substeps = 4;

  void validate() const {
    if (quadrature_order < 1 || substeps < 1)
      throw ArgumentError("OracleConfig: orders must be >= 1");
  }
};

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  std::vector<double> x(n), w(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
  return {x, w};
}

/// exp(-i H(field) t) psi through full diagonalization.
inline StateVector dense_expm(const Hamiltonian& h, double field, double t,
                              const StateVector& psi) {
  if (h.dim() > 64) throw ArgumentError("dense_expm: dimension capped at 64");
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h.to_dense(field));
  if (es.info() != Eigen::Success) throw NumericalError("dense_expm: eigensolver failed");
  StateVector c = es.eigenvectors().adjoint() * psi;
  for (int i = 0; i < c.size(); ++i) c[i] *= std::exp(-kImag * es.eigenvalues()[i] * t);
  return es.eigenvectors() * c;
}

namespace detail {

// One constant-field segment of the Duhamel integral, fixed quadrature:
//   psi(b) = U(b-a) psi(a) + int_a^b U(b-tau) Phi(tau) dtau,
// everything evaluated in the eigenbasis of H(field).
inline StateVector duhamel_segment(const Eigen::SelfAdjointEigenSolver<DenseMatrix>& es,
                                   const StateVector& psi_a,
                                   const std::function<StateVector(double)>& phi, double a,
                                   double b, int substeps, int order) {
  const auto [xs, ws] = gauss_legendre(order);
  const auto& v = es.eigenvectors();
  const auto& ev = es.eigenvalues();
  StateVector acc = StateVector::Zero(psi_a.size());  // eigenbasis integral
  const double h = (b - a) / substeps;
  for (int s = 0; s < substeps; ++s) {
    const double lo = a + s * h;
    for (std::size_t q = 0; q < xs.size(); ++q) {
      const double tau = lo + 0.5 * h * (xs[q] + 1.0);
      StateVector f = v.adjoint() * phi(tau);
      for (int i = 0; i < f.size(); ++i) f[i] *= std::exp(-kImag * ev[i] * (b - tau));
      acc += (0.5 * h * ws[q]) * f;
    }
  }
  StateVector c = v.adjoint() * psi_a;
  for (int i = 0; i < c.size(); ++i) c[i] *= std::exp(-kImag * ev[i] * (b - a));
  return v * (c + acc);
}

}  // namespace detail

/// psi(T) = e^{-iHT} psi0 + int_0^T e^{-iH(T-tau)} Phi(tau) dtau by composite
/// Gauss-Legendre quadrature with substep doubling until the result moves by
/// less than 1e-12. Piecewise-constant fields are handled by chaining segments
/// at the field boundaries.
inline StateVector duhamel_reference(const StateVector& psi0,
                                     const std::function<StateVector(double)>& phi,
                                     const Hamiltonian& h, const FieldSeries& field,
                                     const TimeGrid& grid, OracleConfig cfg = {}) {
  cfg.validate();
  if (h.dim() > 64) throw ArgumentError("duhamel_reference: dimension capped at 64");
  // Merge consecutive steps with identical field values into segments.
  struct Segment {
    double a, b, eps;
  };
  std::vector<Segment> segments;
  for (int s = 0; s < grid.n_steps(); ++s) {
    const double eps = field.step_value(grid, s);
    if (!segments.empty() && segments.back().eps == eps)
      segments.back().b = grid.points[s + 1];
    else
      segments.push_back({grid.points[s], grid.points[s + 1], eps});
  }

  int substeps = cfg.substeps;
  StateVector prev;
  for (int doubling = 0; doubling <= 20; ++doubling) {
    StateVector psi = psi0;
    for (const auto& seg : segments) {
      Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h.to_dense(seg.eps));
      if (es.info() != Eigen::Success)
        throw NumericalError("duhamel_reference: eigensolver failed");
      psi = detail::duhamel_segment(es, psi, phi, seg.a, seg.b, substeps,
                                    cfg.quadrature_order);
    }
    if (doubling > 0 && (psi - prev).cwiseAbs().maxCoeff() < 1e-12) return psi;
    prev = psi;
    substeps *= 2;
  }
  throw NumericalError("duhamel_reference: quadrature did not converge in 20 doublings");
}

/// Convenience overload for a constant field over [0, T].
inline StateVector duhamel_reference(const StateVector& psi0,
                                     const std::function<StateVector(double)>& phi,
                                     const Hamiltonian& h, double field, double total_time,
                                     OracleConfig cfg = {}) {
  return duhamel_reference(psi0, phi, h, FieldSeries::constant_value(field),
                           TimeGrid::equidistant(total_time, 2), cfg);
}

/// Max norm over interior nodes of the centered-difference residual
///   d psi/dt + i H psi - Phi.
inline double residual_check(const SampledTrajectory& traj, const Hamiltonian& h,
                             const FieldSeries& field,
                             const std::function<StateVector(double)>& phi) {
  traj.validate();
  if (traj.grid.n_points() < 3) throw ArgumentError("residual_check: need at least 3 points");
  double worst = 0.0;
  for (int n = 1; n + 1 < traj.grid.n_points(); ++n) {
    const double span = traj.grid.points[n + 1] - traj.grid.points[n - 1];
    const StateVector dpsi = (traj.values[n + 1] - traj.values[n - 1]) / span;
    const StateVector r = dpsi +
                          kImag * h.apply(traj.values[n], field.node_value(traj.grid, n)) -
                          phi(traj.grid.points[n]);
    worst = std::max(worst, norm_of(r));
  }
  return worst;
}

}  // namespace chebprop::oracle
