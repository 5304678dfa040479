#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <utility>
#include <vector>

#include "chebprop/common.hpp"
#include "chebprop/fft.hpp"

namespace chebprop {

using StateVector = Eigen::VectorXcd;
using DenseMatrix = Eigen::MatrixXcd;

/// Sesquilinear inner product, conjugate-linear in the first argument.
inline Complex inner(const StateVector& a, const StateVector& b) {
  if (a.size() != b.size()) throw DimensionError("inner: length mismatch");
  return a.dot(b);
}

inline double norm_of(const StateVector& a) { return std::sqrt(a.dot(a).real()); }

/// Uniform periodic grid over [r_min, r_max): n_points intervals,
/// spacing (r_max - r_min) / n_points, momentum spacing 2*pi/(n_points*dr).
struct SpatialGrid {
  int n_points = 0;
  double r_min = 0.0;
  double r_max = 0.0;

  SpatialGrid() = default;
  SpatialGrid(int n, double rmin, double rmax) : n_points(n), r_min(rmin), r_max(rmax) {
    if (n_points < 2) throw ArgumentError("SpatialGrid: n_points must be >= 2");
    if (!(r_max > r_min)) throw ArgumentError("SpatialGrid: r_max must exceed r_min");
  }

  double spacing() const { return (r_max - r_min) / n_points; }
  double point(int i) const { return r_min + i * spacing(); }

  /// Momentum of FFT bin k with standard wrap-around ordering.
  double momentum(int k) const {
    const int ks = (k <= n_points / 2) ? k : k - n_points;
    return 2.0 * std::numbers::pi * ks / (n_points * spacing());
  }
};

struct SpectralBounds {
  double e_min = 0.0;
  double e_max = 0.0;
  double delta() const { return e_max - e_min; }
};

struct Coupling {
  int i = 0;
  int j = 0;
  double mu = 0.0;  // R-independent transition dipole
};

/// Hamiltonian acting on a flat channel-major state vector. Two representations:
///  - Dense: H(eps) = H0 + eps * H1 with H0, H1 Hermitian.
///  - FourierGrid: per-channel kinetic (spectral) + diagonal potential, plus
///    field-scaled channel couplings with scalar dipoles.
/// Immutable after construction except the application counter, which is shared
/// between copies and incremented once per apply().
class Hamiltonian {
 public:
  static Hamiltonian dense(DenseMatrix h0, DenseMatrix h1 = DenseMatrix()) {
    Hamiltonian h;
    h.dense_ = true;
    if (h1.size() == 0) h1 = DenseMatrix::Zero(h0.rows(), h0.cols());
    if (h0.rows() != h0.cols() || h1.rows() != h1.cols() || h0.rows() != h1.rows())
      throw DimensionError("Hamiltonian::dense: matrices must be square and equal-sized");
    require_hermitian(h0, "h0");
    require_hermitian(h1, "h1");
    h.h0_ = std::move(h0);
    h.h1_ = std::move(h1);
    h.dim_ = static_cast<int>(h.h0_.rows());
    return h;
  }

  static Hamiltonian fourier_grid(SpatialGrid grid, double mass,
                                  std::vector<Eigen::VectorXd> potentials,
                                  std::vector<Coupling> couplings) {
    Hamiltonian h;
    h.dense_ = false;
    if (!(mass > 0.0)) throw ArgumentError("Hamiltonian: mass must be positive");
    if (potentials.empty()) throw ArgumentError("Hamiltonian: need at least one channel");
    for (const auto& v : potentials)
      if (v.size() != grid.n_points)
        throw DimensionError("Hamiltonian: potential length != grid points");
    const int nc = static_cast<int>(potentials.size());
    for (auto& c : couplings) {
      if (c.i == c.j || c.i < 0 || c.j < 0 || c.i >= nc || c.j >= nc)
        throw ArgumentError("Hamiltonian: bad coupling channel indices");
      if (c.i > c.j) std::swap(c.i, c.j);  // canonical (i < j); applied symmetrically
    }
    for (std::size_t a = 0; a < couplings.size(); ++a)
      for (std::size_t b = a + 1; b < couplings.size(); ++b)
        if (couplings[a].i == couplings[b].i && couplings[a].j == couplings[b].j)
          throw ArgumentError("Hamiltonian: duplicate coupling pair");
    h.grid_ = grid;
    h.mass_ = mass;
    h.potentials_ = std::move(potentials);
    h.couplings_ = std::move(couplings);
    h.kinetic_.resize(grid.n_points);
    for (int k = 0; k < grid.n_points; ++k) {
      const double p = grid.momentum(k);
      h.kinetic_[k] = p * p / (2.0 * mass);
    }
    h.dim_ = nc * grid.n_points;
    return h;
  }

  bool is_dense() const { return dense_; }
  int dim() const { return dim_; }
  int n_channels() const { return dense_ ? dim_ : static_cast<int>(potentials_.size()); }
  const SpatialGrid& grid() const { return grid_; }
  double mass() const { return mass_; }
  const DenseMatrix& h0() const { return h0_; }
  const DenseMatrix& h1() const { return h1_; }
  const std::vector<Eigen::VectorXd>& potentials() const { return potentials_; }
  const Eigen::VectorXd& kinetic_spectrum() const { return kinetic_; }
  const std::vector<Coupling>& couplings() const { return couplings_; }

  std::uint64_t applications() const { return counter_->load(); }
  void reset_applications() const { counter_->store(0); }

  /// Copy with its own zeroed application counter (per-run accounting).
  Hamiltonian with_fresh_counter() const {
    Hamiltonian h = *this;
    h.counter_ = std::make_shared<std::atomic<std::uint64_t>>(0);
    return h;
  }

  /// H(field) psi. Counts one Hamiltonian application.
  StateVector apply(const StateVector& psi, double field) const {
    if (psi.size() != dim_) throw DimensionError("Hamiltonian::apply: dimension mismatch");
    if (!std::isfinite(field)) throw ArgumentError("Hamiltonian::apply: non-finite field");
    counter_->fetch_add(1, std::memory_order_relaxed);
    if (dense_) {
      StateVector out = h0_ * psi;
      if (field != 0.0) out.noalias() += field * (h1_ * psi);
      return out;
    }
    const int np = grid_.n_points;
    const int nc = n_channels();
    StateVector out(dim_);
    std::vector<Complex> work(np);
    for (int c = 0; c < nc; ++c) {
      const auto seg = psi.segment(c * np, np);
      for (int i = 0; i < np; ++i) work[i] = seg[i];
      fft::transform(work, -1);
      for (int k = 0; k < np; ++k) work[k] *= kinetic_[k];
      fft::transform(work, +1);
      const double scale = 1.0 / np;
      for (int i = 0; i < np; ++i)
        out[c * np + i] = scale * work[i] + potentials_[c][i] * seg[i];
    }
    if (field != 0.0) {
      for (const auto& cp : couplings_) {
        out.segment(cp.i * np, np) += field * cp.mu * psi.segment(cp.j * np, np);
        out.segment(cp.j * np, np) += field * cp.mu * psi.segment(cp.i * np, np);
      }
    }
    return out;
  }

  /// The field-coupled part alone: dH/d(field) applied to psi. Not counted.
  StateVector apply_coupling(const StateVector& psi) const {
    if (psi.size() != dim_) throw DimensionError("apply_coupling: dimension mismatch");
    if (dense_) return h1_ * psi;
    const int np = grid_.n_points;
    StateVector out = StateVector::Zero(dim_);
    for (const auto& cp : couplings_) {
      out.segment(cp.i * np, np) += cp.mu * psi.segment(cp.j * np, np);
      out.segment(cp.j * np, np) += cp.mu * psi.segment(cp.i * np, np);
    }
    return out;
  }

  /// Rigorous enclosure of the spectrum of H(eps) for all |eps| <= field_max.
  /// Dense: Gershgorin discs widened by the field part. FourierGrid: potential
  /// extrema plus the kinetic maximum, widened by the coupling row sum.
  SpectralBounds spectral_bounds(double field_max) const {
    if (!(field_max >= 0.0)) throw ArgumentError("spectral_bounds: field_max must be >= 0");
    if (dense_) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (int i = 0; i < dim_; ++i) {
        const double c = h0_(i, i).real();
        double r = 0.0;
        for (int j = 0; j < dim_; ++j) {
          if (j != i) r += std::abs(h0_(i, j));
          r += field_max * std::abs(h1_(i, j));
        }
        lo = std::min(lo, c - r);
        hi = std::max(hi, c + r);
      }
      if (!(hi > lo)) hi = lo + 1e-300;
      return {lo, hi};
    }
    double vmin = std::numeric_limits<double>::infinity();
    double vmax = -vmin;
    for (const auto& v : potentials_) {
      vmin = std::min(vmin, v.minCoeff());
      vmax = std::max(vmax, v.maxCoeff());
    }
    std::vector<double> row(n_channels(), 0.0);
    for (const auto& cp : couplings_) {
      row[cp.i] += std::abs(cp.mu);
      row[cp.j] += std::abs(cp.mu);
    }
    double row_max = 0.0;
    for (double r : row) row_max = std::max(row_max, r);
    const double off = field_max * row_max;
    return {vmin - off, vmax + kinetic_.maxCoeff() + off};
  }

  /// H_norm psi with H_norm = 2 (H - E_min)/dE - 1; spectrum mapped into [-1, 1].
  StateVector apply_normalized(const SpectralBounds& bounds, const StateVector& psi,
                               double field) const {
    const double de = bounds.delta();
    if (!(de > 0.0)) throw NumericalError("apply_normalized: degenerate spectral range");
    StateVector out = apply(psi, field);
    out = (2.0 / de) * (out - bounds.e_min * psi) - psi;
    return out;
  }

  /// Explicit matrix representation (kinetic term by DFT conjugation).
  /// Intended for oracle checks and eigenstate preparation at small sizes.
  DenseMatrix to_dense(double field) const {
    if (dense_) return h0_ + field * h1_;
    DenseMatrix out = DenseMatrix::Zero(dim_, dim_);
    const int np = grid_.n_points;
    // T_{ab} = (1/np) sum_k kin_k exp(2*pi*i*k*(a-b)/np)
    Eigen::MatrixXcd kin(np, np);
    for (int a = 0; a < np; ++a)
      for (int b = 0; b < np; ++b) {
        Complex s = 0.0;
        for (int k = 0; k < np; ++k) {
          const double phase = 2.0 * std::numbers::pi * k * (a - b) / np;
          s += kinetic_[k] * Complex(std::cos(phase), std::sin(phase));
        }
        kin(a, b) = s / static_cast<double>(np);
      }
    for (int c = 0; c < n_channels(); ++c) {
      out.block(c * np, c * np, np, np) = kin;
      for (int i = 0; i < np; ++i) out(c * np + i, c * np + i) += potentials_[c][i];
    }
    for (const auto& cp : couplings_) {
      for (int i = 0; i < np; ++i) {
        out(cp.i * np + i, cp.j * np + i) += field * cp.mu;
        out(cp.j * np + i, cp.i * np + i) += field * cp.mu;
      }
    }
    return out;
  }

 private:
  Hamiltonian() : counter_(std::make_shared<std::atomic<std::uint64_t>>(0)) {}

  static void require_hermitian(const DenseMatrix& m, const char* name) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw ArgumentError(std::string("Hamiltonian: matrix ") + name + " is not Hermitian");
  }

  bool dense_ = true;
  int dim_ = 0;
  DenseMatrix h0_, h1_;
  SpatialGrid grid_;
  double mass_ = 0.0;
  std::vector<Eigen::VectorXd> potentials_;
  Eigen::VectorXd kinetic_;
  std::vector<Coupling> couplings_;
  std::shared_ptr<std::atomic<std::uint64_t>> counter_;
};

}  // namespace chebprop
