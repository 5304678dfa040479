#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "chebprop/common.hpp"
#include "chebprop/hilbert.hpp"

namespace chebprop::models {

/// V(R) = d_e (1 - exp(-a (R - r_e)))^2 + offset.
inline Eigen::VectorXd morse_potential(const SpatialGrid& grid, double d_e, double a, double r_e,
                                       double offset) {
  Eigen::VectorXd v(grid.n_points);
  for (int i = 0; i < grid.n_points; ++i) {
    const double u = 1.0 - std::exp(-a * (grid.point(i) - r_e));
    v[i] = d_e * u * u + offset;
  }
  return v;
}

/// V(R) = 0.5 mass omega^2 (R - r_e)^2 + offset.
inline Eigen::VectorXd harmonic_potential(const SpatialGrid& grid, double mass, double omega,
                                          double r_e, double offset) {
  Eigen::VectorXd v(grid.n_points);
  for (int i = 0; i < grid.n_points; ++i) {
    const double dr = grid.point(i) - r_e;
    v[i] = 0.5 * mass * omega * omega * dr * dr + offset;
  }
  return v;
}

inline Eigen::VectorXd constant_potential(const SpatialGrid& grid, double value) {
  return Eigen::VectorXd::Constant(grid.n_points, value);
}

/// Vibrational eigenstates of a single channel: the channel Hamiltonian is
/// converted to a dense matrix and diagonalized. Returns the lowest `count`
/// eigenpairs; the states are embedded in the full multi-channel space.
struct ChannelEigenstates {
  std::vector<double> energies;
  std::vector<StateVector> states;  // full-dimension, support on one channel
};

inline ChannelEigenstates channel_eigenstates(const Hamiltonian& h, int channel, int count) {
  if (h.is_dense()) throw ArgumentError("channel_eigenstates: grid models only");
  const int np = h.grid().n_points;
  if (channel < 0 || channel >= h.n_channels())
    throw ArgumentError("channel_eigenstates: channel out of range");
  // Single-channel model reusing the same grid and potential, no couplings.
  Hamiltonian single = Hamiltonian::fourier_grid(h.grid(), h.mass(),
                                                 {h.potentials()[channel]}, {});
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(single.to_dense(0.0));
  if (es.info() != Eigen::Success) throw NumericalError("channel_eigenstates: eigensolver failed");
  ChannelEigenstates out;
  count = std::min(count, np);
  for (int k = 0; k < count; ++k) {
    out.energies.push_back(es.eigenvalues()[k]);
    StateVector full = StateVector::Zero(h.dim());
    full.segment(channel * np, np) = es.eigenvectors().col(k);
    // fix the overall sign so results are reproducible
    int imax = 0;
    double vmax = 0.0;
    for (int i = 0; i < np; ++i)
      if (std::abs(full[channel * np + i]) > vmax) {
        vmax = std::abs(full[channel * np + i]);
        imax = i;
      }
    if (full[channel * np + imax].real() < 0.0) full = -full;
    out.states.push_back(std::move(full));
  }
  return out;
}

/// Three-channel Morse model standing in for a heavy-diatomic Raman system:
/// ground channel X, bright intermediate A, and an upper channel that acts as
/// the loss manifold. Vibrational spacing and channel shifts are chosen so the
/// X-A and A-upper transitions look alike; the grid uses 128 points.
inline Hamiltonian build_raman_surrogate(int n_points = 128) {
  const SpatialGrid grid(n_points, 5.5, 14.5);
  const double mass = 77435.0;  // reduced mass, a.u.
  const double te_a = cm1_to_au(9900.0);
  const double te_u = cm1_to_au(19800.0);
  std::vector<Eigen::VectorXd> pots = {
      morse_potential(grid, 0.020, 0.45, 7.0, 0.0),
      morse_potential(grid, 0.015, 0.40, 7.6, te_a),
      morse_potential(grid, 0.015, 0.40, 8.2, te_u),
  };
  return Hamiltonian::fourier_grid(grid, mass, std::move(pots),
                                   {{0, 1, 1.0}, {1, 2, 1.0}});
}

/// Double-Lambda model in a two-carrier rotating frame: only detunings remain
/// on the diagonal and the couplings are driven by the slow envelope. Used for
/// the large-step, high-order studies on non-equidistant grids.
inline Hamiltonian build_double_lambda_rwa(double detuning_cm1 = 2.0) {
  DenseMatrix h0 = DenseMatrix::Zero(5, 5);
  // ground levels at their Raman detunings, excited levels at the carrier detuning
  h0(1, 1) = cm1_to_au(0.5 * detuning_cm1);
  h0(2, 2) = cm1_to_au(detuning_cm1);
  h0(3, 3) = cm1_to_au(detuning_cm1);
  h0(4, 4) = cm1_to_au(1.5 * detuning_cm1);
  DenseMatrix h1 = DenseMatrix::Zero(5, 5);
  for (int g : {0, 1, 2})
    for (int x : {3, 4}) {
      h1(g, x) = 0.5;  // RWA halves the coupling
      h1(x, g) = 0.5;
    }
  return Hamiltonian::dense(std::move(h0), std::move(h1));
}

}  // namespace chebprop::models
