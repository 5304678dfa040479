#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "chebprop/chebkernel.hpp"
#include "chebprop/common.hpp"
#include "chebprop/hilbert.hpp"
#include "chebprop/timegrid.hpp"

namespace chebprop {

enum class Scheme { Full, TaylorApprox, Symmetrical };
enum class PhiMode { TaylorCoeffs, UniformCheb };
enum class TimeDirection { Forward, Backward };

/// Inhomogeneous source term Phi(t): an analytic callback, samples on the
/// propagation grid, or absent (homogeneous equation).
struct InhomogeneousTerm {
  enum class Kind { None, Analytic, Sampled };
  Kind kind = Kind::None;
  std::function<StateVector(double)> fn;
  SampledTrajectory traj;

  static InhomogeneousTerm none() { return {}; }
  static InhomogeneousTerm analytic(std::function<StateVector(double)> f) {
    InhomogeneousTerm t;
    t.kind = Kind::Analytic;
    t.fn = std::move(f);
    return t;
  }
  static InhomogeneousTerm sampled(SampledTrajectory s) {
    s.validate();
    InhomogeneousTerm t;
    t.kind = Kind::Sampled;
    t.traj = std::move(s);
    return t;
  }

  /// Value at an arbitrary time (interpolating if sampled).
  StateVector at(double t) const {
    switch (kind) {
      case Kind::Analytic:
        return fn(t);
      case Kind::Sampled:
        return interpolate(traj, t);
      default:
        throw ArgumentError("InhomogeneousTerm::at: term has no values");
    }
  }
};

/// Control field handed to the propagator. The Hamiltonian is frozen within
/// each step; node-sampled and analytic fields are evaluated at the step
/// midpoint, per-step values are used as given.
struct FieldSeries {
  enum class Kind { Constant, Callback, NodeSamples, StepValues };
  Kind kind = Kind::Constant;
  double constant = 0.0;
  std::function<double(double)> fn;
  std::vector<double> values;

  static FieldSeries zero() { return {}; }
  static FieldSeries constant_value(double v) {
    FieldSeries f;
    f.constant = v;
    return f;
  }
  static FieldSeries callback(std::function<double(double)> g) {
    FieldSeries f;
    f.kind = Kind::Callback;
    f.fn = std::move(g);
    return f;
  }
  static FieldSeries node_samples(std::vector<double> v) {
    FieldSeries f;
    f.kind = Kind::NodeSamples;
    f.values = std::move(v);
    return f;
  }
  static FieldSeries step_values(std::vector<double> v) {
    FieldSeries f;
    f.kind = Kind::StepValues;
    f.values = std::move(v);
    return f;
  }

  double step_value(const TimeGrid& grid, int step) const {
    switch (kind) {
      case Kind::Constant:
        return constant;
      case Kind::Callback:
        return fn(0.5 * (grid.points[step] + grid.points[step + 1]));
      case Kind::NodeSamples:
        check(grid.n_points());
        return 0.5 * (values[step] + values[step + 1]);
      case Kind::StepValues:
        check(grid.n_steps());
        return values[step];
    }
    return 0.0;
  }

  double node_value(const TimeGrid& grid, int node) const {
    switch (kind) {
      case Kind::Constant:
        return constant;
      case Kind::Callback:
        return fn(grid.points[node]);
      case Kind::NodeSamples:
        check(grid.n_points());
        return values[node];
      case Kind::StepValues:
        check(grid.n_steps());
        return values[std::min(node, grid.n_steps() - 1)];
    }
    return 0.0;
  }

  double max_abs(const TimeGrid& grid) const {
    double m = 0.0;
    for (int n = 0; n < grid.n_points(); ++n) m = std::max(m, std::abs(node_value(grid, n)));
    for (int s = 0; s < grid.n_steps(); ++s) m = std::max(m, std::abs(step_value(grid, s)));
    return m;
  }

 private:
  void check(int expected) const {
    if (static_cast<int>(values.size()) != expected)
      throw DimensionError("FieldSeries: sample count does not match grid");
  }
};

struct PropagatorConfig {
  int m = 1;
  Scheme scheme = Scheme::Full;
  PhiMode phi_mode = PhiMode::TaylorCoeffs;
  TimeGrid grid;
  double tolerance = 1e-12;
  double eps_switch = 0.5;
  int n_cheb_sample = 16;              // Chebyshev samples for the uniform Phi fit
  std::optional<int> fixed_n_cheb;     // pin the expansion degree (cost studies)

  void validate() const {
    if (m < 1) throw ArgumentError("PropagatorConfig: order must be >= 1");
    if (!(tolerance > 0.0)) throw ArgumentError("PropagatorConfig: tolerance must be > 0");
    if (!(eps_switch > 0.0)) throw ArgumentError("PropagatorConfig: eps_switch must be > 0");
    if (scheme == Scheme::TaylorApprox && phi_mode != PhiMode::TaylorCoeffs)
      throw ArgumentError("PropagatorConfig: TaylorApprox requires Taylor phi coefficients");
    if (n_cheb_sample < std::max(2, m))
      throw ArgumentError("PropagatorConfig: n_cheb_sample too small for the order");
    if (grid.n_points() < 2) throw ArgumentError("PropagatorConfig: grid is empty");
  }
};

/// Local source coefficients of one step: Phi(tau) ~ sum_j tau^j/j! * derivs[j].
using PhiCoefficients = std::vector<StateVector>;

/// lambda^(0..m): lambda^(0) = psi0, lambda^(j) = -i H lambda^(j-1) + Phi^(j-1).
using LambdaStack = std::vector<StateVector>;

/// C[k][j] with P_k(x) = sum_j C[k][j] x^j / j! (Chebyshev in factorial-scaled
/// monomials), from the three-term recurrence.
inline std::vector<std::vector<double>> chebyshev_monomial_matrix(int degree) {
  std::vector<std::vector<double>> c(degree + 1);
  c[0] = {1.0};
  if (degree == 0) return c;
  c[1] = {0.0, 1.0};
  for (int k = 1; k < degree; ++k) {
    c[k + 1].assign(k + 2, 0.0);
    c[k + 1][0] = -c[k - 1][0];
    for (int j = 1; j <= k - 1; ++j) c[k + 1][j] = 2.0 * j * c[k][j - 1] - c[k - 1][j];
    c[k + 1][k] = 2.0 * k * c[k][k - 1];
    c[k + 1][k + 1] = 2.0 * (k + 1) * c[k][k];
  }
  return c;
}

/// Transform vector-valued Chebyshev coefficients A_k into coefficients B_j of
/// the factorial-scaled monomial basis: sum_k A_k P_k(x) = sum_j B_j x^j / j!.
inline std::vector<StateVector> cheb_to_monomial(const std::vector<StateVector>& a) {
  if (a.empty()) throw ArgumentError("cheb_to_monomial: empty input");
  const int degree = static_cast<int>(a.size()) - 1;
  const auto c = chebyshev_monomial_matrix(degree);
  std::vector<StateVector> b(a.size(), StateVector::Zero(a[0].size()));
  for (int k = 0; k <= degree; ++k)
    for (int j = 0; j <= k; ++j) b[j] += c[k][j] * a[k];
  return b;
}

inline LambdaStack lambda_recursion(const Hamiltonian& h, double field, const StateVector& psi0,
                                    const PhiCoefficients& phis, int m) {
  if (static_cast<int>(phis.size()) < m)
    throw DimensionError("lambda_recursion: need m source coefficients");
  LambdaStack lambda;
  lambda.reserve(m + 1);
  lambda.push_back(psi0);
  for (int j = 1; j <= m; ++j)
    lambda.push_back(-kImag * h.apply(lambda[j - 1], field) + phis[j - 1]);
  return lambda;
}

/// One step of the full order-m scheme:
///   psi(t+dt) = sum_{j<m} dt^j/j! lambda^(j) + f_m(H) lambda^(m),
/// a single Chebyshev expansion plus m extra Hamiltonian applications.
inline StateVector propagate_step(const StateVector& psi, const PhiCoefficients& phis,
                                  const Hamiltonian& h, double field, double dt,
                                  const ChebyshevExpansion& exp_fm) {
  const int m = exp_fm.m;
  const auto lambda = lambda_recursion(h, field, psi, phis, m);
  StateVector out = lambda[0];
  double fac = 1.0;
  for (int j = 1; j < m; ++j) {
    fac *= dt / j;
    out += fac * lambda[j];
  }
  out += apply_expansion(exp_fm, h, field, lambda[m]);
  return out;
}

/// The same step evaluated through the alternative form
///   psi(t+dt) = f_0(H) psi + sum_{j<m} f_{j+1}(H) Phi^(j)
/// with one expansion per term. Reference route for equivalence tests only.
inline StateVector formal_solution_alt(const StateVector& psi, const PhiCoefficients& phis,
                                       const Hamiltonian& h, double field, double dt,
                                       const SpectralBounds& bounds,
                                       const PropagatorConfig& cfg) {
  const int m = cfg.m;
  StateVector out =
      apply_expansion(coefficients_analytic_f0(1 << 18, bounds, dt, cfg.tolerance), h, field, psi);
  for (int j = 0; j < m; ++j) {
    const auto exp = build_expansion(FmSpec(j + 1, dt, cfg.eps_switch), bounds, cfg.tolerance);
    out += apply_expansion(exp, h, field, phis[j]);
  }
  return out;
}

/// Taylor-approximate step: standard Chebyshev propagation of psi plus the
/// plain Taylor tail of the source, psi(t+dt) ~ f_0(H) psi + sum dt^{j+1}/(j+1)! Phi^(j).
inline StateVector propagate_step_taylor_approx(const StateVector& psi,
                                                const PhiCoefficients& phis, const Hamiltonian& h,
                                                double field, double dt, int m,
                                                const ChebyshevExpansion& exp_f0) {
  StateVector out = apply_expansion(exp_f0, h, field, psi);
  double fac = 1.0;
  for (int j = 0; j < m; ++j) {
    fac *= dt / (j + 1);
    out += fac * phis[j];
  }
  return out;
}

/// Reference first-order step evaluated in the eigenbasis (dense models only):
/// the source is frozen at the endpoint average and propagated with f_1.
inline StateVector propagate_step_symmetrical(const StateVector& psi, const StateVector& phi_n,
                                              const StateVector& phi_n1, const Hamiltonian& h,
                                              double field, double dt, double eps_switch = 0.5) {
  if (!h.is_dense())
    throw ArgumentError("propagate_step_symmetrical: requires a dense Hamiltonian");
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h.to_dense(field));
  if (es.info() != Eigen::Success)
    throw NumericalError("propagate_step_symmetrical: eigendecomposition failed");
  const StateVector phi_bar = 0.5 * (phi_n + phi_n1);
  const StateVector psi_eig = es.eigenvectors().adjoint() * psi;
  const StateVector phi_eig = es.eigenvectors().adjoint() * phi_bar;
  const FmSpec f1(1, dt, eps_switch);
  StateVector out_eig(psi.size());
  for (int i = 0; i < psi.size(); ++i) {
    const double e = es.eigenvalues()[i];
    out_eig[i] = std::exp(-kImag * e * dt) * psi_eig[i] + fm_scalar(f1, e) * phi_eig[i];
  }
  return es.eigenvectors() * out_eig;
}

/// Taylor coefficients of the source at every grid node: Phi^(j)(t_n) is the
/// j-th time derivative, evaluated spectrally on the grid (FFT on equidistant
/// grids, Chebyshev recurrence on Lobatto grids).
inline std::vector<SampledTrajectory> prepare_phi_taylor(const SampledTrajectory& phi, int m) {
  phi.validate();
  std::vector<SampledTrajectory> derivs;
  derivs.reserve(m);
  derivs.push_back(phi);
  for (int j = 1; j < m; ++j) derivs.push_back(derivative(phi, j));
  return derivs;
}

/// Uniform (Chebyshev) source coefficients for the step starting at t_start of
/// signed length dt: sample Phi at the Chebyshev roots of the window, cosine
/// transform, keep m coefficients, transform to the monomial basis, and
/// re-expand about tau = 0 so that Phi(tau) ~ sum_j tau^j/j! Phi^(j).
inline PhiCoefficients prepare_phi_uniform(const InhomogeneousTerm& phi, double t_start,
                                           double dt, int m, int n_samples) {
  const int K = n_samples;
  std::vector<StateVector> samples(K);
  for (int k = 0; k < K; ++k) {
    const double x = std::cos(std::numbers::pi * (k + 0.5) / K);
    samples[k] = phi.at(t_start + 0.5 * dt * (x + 1.0));
  }
  const int dim = static_cast<int>(samples[0].size());
  // a_j = (2 - d_{j0})/K sum_k Phi(tau_k) cos(j theta_k), kept for j < m
  std::vector<StateVector> abar(m, StateVector::Zero(dim));
  std::vector<double> re(K), im(K);
  for (int d = 0; d < dim; ++d) {
    for (int k = 0; k < K; ++k) {
      re[k] = samples[k][d].real();
      im[k] = samples[k][d].imag();
    }
    const auto cre = fft::dct2(re);
    const auto cim = fft::dct2(im);
    for (int j = 0; j < m; ++j) {
      const double factor = (j == 0) ? 0.5 / K : 1.0 / K;
      abar[j][d] = factor * Complex(cre[j], cim[j]);
    }
  }
  const auto b = cheb_to_monomial(abar);
  // Re-expansion from scaled time (2 tau/dt - 1) to tau powers:
  //   Phi^(i) = (2/dt)^i sum_{j>=i} B_j (-1)^{j-i} / (j-i)!
  PhiCoefficients out(m, StateVector::Zero(dim));
  for (int i = 0; i < m; ++i) {
    double fac = 1.0;  // (-1)^{j-i} / (j-i)!
    for (int j = i; j < m; ++j) {
      out[i] += fac * b[j];
      fac *= -1.0 / (j - i + 1);
    }
    out[i] *= std::pow(2.0 / dt, i);
  }
  return out;
}

struct RunReport {
  Scheme scheme = Scheme::Full;
  int m = 0;
  int n_steps = 0;
  double dt = 0.0;       // equidistant step (0 for Lobatto grids)
  double dt_max = 0.0;
  std::vector<int> n_cheb;  // distinct expansion degrees used
  std::uint64_t h_applications = 0;
  double wall_seconds = 0.0;

  int n_cheb_single() const {
    return n_cheb.size() == 1 ? n_cheb.front() : (n_cheb.empty() ? 0 : n_cheb.back());
  }
};

namespace detail {

class ExpansionCache {
 public:
  ExpansionCache(const SpectralBounds& bounds, const PropagatorConfig& cfg, int m_eff)
      : bounds_(bounds), cfg_(cfg), m_eff_(m_eff) {
    quantum_ = cfg.grid.max_step() * 1e-12;
  }

  const ChebyshevExpansion& get(double dt) {
    const long long key = std::llround(dt / quantum_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    ChebyshevExpansion exp = build_expansion(FmSpec(m_eff_, dt, cfg_.eps_switch), bounds_,
                                             cfg_.tolerance);
    if (cfg_.fixed_n_cheb) exp = with_fixed_degree(std::move(exp), *cfg_.fixed_n_cheb);
    return cache_.emplace(key, std::move(exp)).first->second;
  }

  std::vector<int> degrees() const {
    std::vector<int> d;
    for (const auto& [k, e] : cache_) d.push_back(e.degree());
    std::sort(d.begin(), d.end());
    d.erase(std::unique(d.begin(), d.end()), d.end());
    return d;
  }

 private:
  SpectralBounds bounds_;
  const PropagatorConfig& cfg_;
  int m_eff_;
  double quantum_;
  std::map<long long, ChebyshevExpansion> cache_;
};

}  // namespace detail

/// Propagate over the whole grid in either time direction. psi0 is the state
/// at t = 0 (forward) or t = T (backward). Expansions are built lazily and
/// cached per distinct step length. A homogeneous term dispatches to the
/// standard Chebyshev propagator.
inline SampledTrajectory propagate(const StateVector& psi0, const InhomogeneousTerm& phi,
                                   const Hamiltonian& h_in, const FieldSeries& field,
                                   const PropagatorConfig& cfg,
                                   TimeDirection direction = TimeDirection::Forward,
                                   RunReport* report = nullptr) {
  cfg.validate();
  const TimeGrid& grid = cfg.grid;
  if (psi0.size() != h_in.dim()) throw DimensionError("propagate: state dimension mismatch");
  const auto t0 = std::chrono::steady_clock::now();

  Hamiltonian h = h_in.with_fresh_counter();
  const SpectralBounds bounds = h.spectral_bounds(field.max_abs(grid));

  const bool homogeneous = (phi.kind == InhomogeneousTerm::Kind::None);
  const bool symmetrical = (cfg.scheme == Scheme::Symmetrical);
  const bool taylor_mode = (cfg.phi_mode == PhiMode::TaylorCoeffs);

  // Node samples of Phi (and its time derivatives for the Taylor route).
  std::vector<SampledTrajectory> node_derivs;
  if (!homogeneous && (symmetrical || taylor_mode)) {
    SampledTrajectory sampled;
    if (phi.kind == InhomogeneousTerm::Kind::Sampled) {
      sampled = phi.traj;
      sampled.validate();
      if (sampled.grid.n_points() != grid.n_points())
        throw DimensionError("propagate: sampled source not on the propagation grid");
    } else {
      sampled.grid = grid;
      sampled.values.reserve(grid.n_points());
      for (int n = 0; n < grid.n_points(); ++n) sampled.values.push_back(phi.fn(grid.points[n]));
    }
    if (symmetrical)
      node_derivs.push_back(std::move(sampled));
    else
      node_derivs = prepare_phi_taylor(sampled, cfg.m);
  }

  const int m_expansion = (homogeneous || cfg.scheme != Scheme::Full) ? 0 : cfg.m;
  detail::ExpansionCache cache(bounds, cfg, m_expansion);

  SampledTrajectory out;
  out.grid = grid;
  out.values.assign(grid.n_points(), StateVector());
  const bool forward = (direction == TimeDirection::Forward);
  const int n_steps = grid.n_steps();
  int node = forward ? 0 : grid.n_points() - 1;
  out.values[node] = psi0;
  StateVector psi = psi0;

  PhiCoefficients phis(cfg.m, StateVector::Zero(h.dim()));
  for (int s = 0; s < n_steps; ++s) {
    const int step_index = forward ? s : n_steps - 1 - s;
    const int next = forward ? node + 1 : node - 1;
    const double dt = grid.points[next] - grid.points[node];
    const double eps = field.step_value(grid, step_index);

    if (symmetrical) {
      const StateVector& phi_a = homogeneous ? phis[0] : node_derivs[0].values[node];
      const StateVector& phi_b = homogeneous ? phis[0] : node_derivs[0].values[next];
      psi = propagate_step_symmetrical(psi, phi_a, phi_b, h, eps, dt, cfg.eps_switch);
    } else if (homogeneous) {
      psi = apply_expansion(cache.get(dt), h, eps, psi);
    } else {
      if (taylor_mode) {
        for (int j = 0; j < cfg.m; ++j) phis[j] = node_derivs[j].values[node];
      } else {
        phis = prepare_phi_uniform(phi, grid.points[node], dt, cfg.m, cfg.n_cheb_sample);
      }
      try {
        if (cfg.scheme == Scheme::Full)
          psi = propagate_step(psi, phis, h, eps, dt, cache.get(dt));
        else
          psi = propagate_step_taylor_approx(psi, phis, h, eps, dt, cfg.m, cache.get(dt));
      } catch (const Error& e) {
        throw NumericalError("propagate: step " + std::to_string(step_index) +
                             " failed: " + e.what());
      }
    }
    out.values[next] = psi;
    node = next;
  }

  if (report) {
    report->scheme = cfg.scheme;
    report->m = cfg.m;
    report->n_steps = n_steps;
    report->dt = grid.kind == GridKind::Equidistant ? grid.dt() : 0.0;
    report->dt_max = grid.max_step();
    report->n_cheb = cache.degrees();
    report->h_applications = h.applications();
    report->wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  return out;
}

}  // namespace chebprop
