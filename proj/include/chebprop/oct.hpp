#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "chebprop/common.hpp"
#include "chebprop/hilbert.hpp"
#include "chebprop/inhom.hpp"
#include "chebprop/timegrid.hpp"

namespace chebprop::oct {

/// Hermitian idempotent projector: a set of basis levels, a set of grid
/// channels, or |v><v| for a normalized state v.
class Projector {
 public:
  enum class Kind { Levels, Channels, Rank1 };

  static Projector levels(std::vector<int> idx, int dim) {
    Projector p;
    p.kind_ = Kind::Levels;
    p.idx_ = std::move(idx);
    p.dim_ = dim;
    for (int i : p.idx_)
      if (i < 0 || i >= dim) throw ArgumentError("Projector: level index out of range");
    return p;
  }
  static Projector channels(std::vector<int> idx, int n_channels, int n_points) {
    Projector p;
    p.kind_ = Kind::Channels;
    p.idx_ = std::move(idx);
    p.dim_ = n_channels * n_points;
    p.block_ = n_points;
    for (int i : p.idx_)
      if (i < 0 || i >= n_channels) throw ArgumentError("Projector: channel index out of range");
    return p;
  }
  static Projector rank1(StateVector v) {
    Projector p;
    p.kind_ = Kind::Rank1;
    const double n = norm_of(v);
    if (!(n > 0.0)) throw ArgumentError("Projector: zero target state");
    p.vec_ = v / n;
    p.dim_ = static_cast<int>(v.size());
    return p;
  }

  int dim() const { return dim_; }

  StateVector apply(const StateVector& psi) const {
    if (psi.size() != dim_) throw DimensionError("Projector: dimension mismatch");
    if (kind_ == Kind::Rank1) return vec_ * inner(vec_, psi);
    StateVector out = StateVector::Zero(dim_);
    if (kind_ == Kind::Levels) {
      for (int i : idx_) out[i] = psi[i];
    } else {
      for (int c : idx_) out.segment(c * block_, block_) = psi.segment(c * block_, block_);
    }
    return out;
  }

  double expectation(const StateVector& psi) const { return inner(psi, apply(psi)).real(); }

 private:
  Kind kind_ = Kind::Levels;
  std::vector<int> idx_;
  StateVector vec_;
  int dim_ = 0;
  int block_ = 0;
};

/// Optimization target. FinalTime: projector D at t = T only. StateConstraint:
/// D at T plus the time-independent allowed-subspace reward G = P_allow.
/// TimeDependent: a projector schedule G(t) built from logistic windows,
/// Gamma(t) = 1/(1 + exp(-k t)) replacing each step function edge.
struct TargetSpec {
  enum class Kind { FinalTime, StateConstraint, TimeDependent };
  Kind kind = Kind::FinalTime;
  Projector target;               // D
  Projector allow;                // P_allow (StateConstraint)
  std::vector<int> window_levels; // TimeDependent: one level per window
  std::vector<double> boundaries; // {0, T_1, ..., T} (windows + 1 entries)
  double steepness = 0.0;         // k (a.u.^-1)

  static TargetSpec final_time(Projector d) {
    TargetSpec t;
    t.kind = Kind::FinalTime;
    t.target = std::move(d);
    return t;
  }
  static TargetSpec state_constraint(Projector d, Projector p_allow) {
    TargetSpec t;
    t.kind = Kind::StateConstraint;
    t.target = std::move(d);
    t.allow = std::move(p_allow);
    return t;
  }
  static TargetSpec time_dependent(std::vector<int> levels, std::vector<double> bounds,
                                   double k) {
    if (levels.size() + 1 != bounds.size())
      throw ArgumentError("TargetSpec: need one boundary more than windows");
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i)
      if (!(bounds[i] < bounds[i + 1]))
        throw ArgumentError("TargetSpec: switch times must increase");
    if (!(k > 0.0)) throw ArgumentError("TargetSpec: steepness must be > 0");
    TargetSpec t;
    t.kind = Kind::TimeDependent;
    t.window_levels = std::move(levels);
    t.boundaries = std::move(bounds);
    t.steepness = k;
    return t;
  }

  double gamma(double t) const { return 1.0 / (1.0 + std::exp(-steepness * t)); }

  /// Weight of window w at time t. The first window carries only its upper
  /// edge, later windows both edges, mirroring the written product form.
  double window_weight(int w, double t) const {
    double weight = gamma(boundaries[w + 1] - t);
    if (w > 0) weight *= gamma(t - boundaries[w]);
    return weight;
  }

  bool has_running_target() const { return kind != Kind::FinalTime; }

  /// G(t) applied to a state.
  StateVector apply_g(double t, const StateVector& phi) const {
    switch (kind) {
      case Kind::StateConstraint:
        return allow.apply(phi);
      case Kind::TimeDependent: {
        StateVector out = StateVector::Zero(phi.size());
        for (std::size_t w = 0; w < window_levels.size(); ++w)
          out[window_levels[w]] += window_weight(static_cast<int>(w), t) * phi[window_levels[w]];
        return out;
      }
      default:
        return StateVector::Zero(phi.size());
    }
  }

  double g_expectation(double t, const StateVector& phi) const {
    return has_running_target() ? inner(phi, apply_g(t, phi)).real() : 0.0;
  }
};

/// Field samples and weights of one optimization run. eps[s] is the constant
/// field on step s (the trailing node entry mirrors the last step for output).
struct ControlField {
  std::vector<double> eps;
  std::vector<double> eps_ref;
  std::vector<double> lambda_a;
  double lambda_b = 0.0;
  double lambda_0 = 1.0;

  void validate(const TimeGrid& grid) const {
    const auto np = static_cast<std::size_t>(grid.n_points());
    if (eps.size() != np || eps_ref.size() != np || lambda_a.size() != np)
      throw DimensionError("ControlField: sample count != N_t");
    for (double la : lambda_a)
      if (!(la > 0.0)) throw ArgumentError("ControlField: lambda_a must be positive");
  }
};

struct FunctionalReport {
  int iteration = 0;
  double j = 0.0;
  double j0 = 0.0;
  double ja = 0.0;
  double jb = 0.0;
  double j_norm = 0.0;
};

inline double trapezoid(const TimeGrid& grid, const std::function<double(int)>& f) {
  double acc = 0.0;
  for (int n = 0; n + 1 < grid.n_points(); ++n)
    acc += 0.5 * (grid.points[n + 1] - grid.points[n]) * (f(n) + f(n + 1));
  return acc;
}

/// J = J0 + Ja + Jb with
///   J0 = lambda_0 <phi(T)|D|phi(T)>,  Ja = int lambda_a (eps - eps_ref)^2,
///   Jb = int lambda_b <phi|G(t)|phi>,  J_norm = J / (lambda_0 + lambda_b T).
inline FunctionalReport evaluate_functional(const SampledTrajectory& phi_traj,
                                            const ControlField& field, const TargetSpec& target) {
  phi_traj.validate();
  const TimeGrid& grid = phi_traj.grid;
  field.validate(grid);
  FunctionalReport r;
  if (target.kind != TargetSpec::Kind::TimeDependent)
    r.j0 = field.lambda_0 * target.target.expectation(phi_traj.values.back());
  r.ja = trapezoid(grid, [&](int n) {
    const double d = field.eps[n] - field.eps_ref[n];
    return field.lambda_a[n] * d * d;
  });
  if (target.has_running_target())
    r.jb = trapezoid(grid, [&](int n) {
      return field.lambda_b * target.g_expectation(grid.points[n], phi_traj.values[n]);
    });
  r.j = r.j0 + r.ja + r.jb;
  r.j_norm = r.j / (field.lambda_0 + field.lambda_b * grid.total_time);
  return r;
}

/// Homogeneous forward propagation under the sampled field, trajectory stored
/// at every node.
inline SampledTrajectory forward_propagate(const StateVector& phi0, const ControlField& field,
                                           const Hamiltonian& h, const PropagatorConfig& cfg,
                                           RunReport* report = nullptr) {
  field.validate(cfg.grid);
  std::vector<double> steps(field.eps.begin(), field.eps.end() - 1);
  return propagate(phi0, InhomogeneousTerm::none(), h, FieldSeries::step_values(std::move(steps)),
                   cfg, TimeDirection::Forward, report);
}

/// Backward solve of d psi/dt = -i H[eps] psi + lambda_b G(t) phi(t) from T to
/// 0, with psi(T) = -lambda_0 D phi(T) (final-time / state-constraint targets)
/// or psi(T) = 0 (time-dependent target).
inline SampledTrajectory backward_inhomogeneous(const SampledTrajectory& phi_traj,
                                                const ControlField& field,
                                                const TargetSpec& target, const Hamiltonian& h,
                                                const PropagatorConfig& cfg,
                                                RunReport* report = nullptr) {
  phi_traj.validate();
  field.validate(cfg.grid);
  if (phi_traj.grid.n_points() != cfg.grid.n_points())
    throw DimensionError("backward_inhomogeneous: trajectory not on the propagation grid");

  StateVector psi_T;
  if (target.kind == TargetSpec::Kind::TimeDependent)
    psi_T = StateVector::Zero(h.dim());
  else
    psi_T = -field.lambda_0 * target.target.apply(phi_traj.values.back());

  InhomogeneousTerm term = InhomogeneousTerm::none();
  if (target.has_running_target() && field.lambda_b != 0.0) {
    SampledTrajectory src;
    src.grid = cfg.grid;
    src.values.reserve(cfg.grid.n_points());
    for (int n = 0; n < cfg.grid.n_points(); ++n)
      src.values.push_back(field.lambda_b *
                           target.apply_g(cfg.grid.points[n], phi_traj.values[n]));
    term = InhomogeneousTerm::sampled(std::move(src));
  }
  std::vector<double> steps(field.eps.begin(), field.eps.end() - 1);
  return propagate(psi_T, term, h, FieldSeries::step_values(std::move(steps)), cfg,
                   TimeDirection::Backward, report);
}

struct KrotovResult {
  std::vector<FunctionalReport> reports;  // entry 0 is the guess field
  ControlField field;
  SampledTrajectory forward;  // trajectory under the final field
  int monotonic_violations = 0;
  double worst_violation = 0.0;
};

// Bound on |eps| across a sweep: Krotov updates may push the field a little
// past the previous maximum, so pad the spectral enclosure.
inline double max_abs_plus_margin(const ControlField& field, const TimeGrid&) {
  double m = 0.0;
  for (double e : field.eps) m = std::max(m, std::abs(e));
  return 2.0 * m + 1e-6;
}

/// Sequential Krotov iteration: backward solve with the previous field, then a
/// forward sweep with the field updated immediately at each step,
///   eps_new(t) = eps_old(t) + Im<phi_new(t)| dH/d eps |psi(t)> / lambda_a(t).
/// The reference field of Ja is rebased to the previous iterate each sweep.
/// Decreases of J beyond a 1e-10 slack are counted as monotonicity violations.
inline KrotovResult krotov_iterate(const StateVector& phi0, ControlField field,
                                   const TargetSpec& target, const Hamiltonian& h,
                                   const PropagatorConfig& cfg, int n_iters) {
  cfg.validate();
  field.validate(cfg.grid);
  const TimeGrid& grid = cfg.grid;
  const int n_steps = grid.n_steps();
  constexpr double kSlack = 1e-10;

  KrotovResult result;
  SampledTrajectory phi_traj = forward_propagate(phi0, field, h, cfg);
  FunctionalReport report = evaluate_functional(phi_traj, field, target);
  report.iteration = 0;
  result.reports.push_back(report);

  // Homogeneous stepping of the forward sweep reuses one expansion per step
  // length; field values enter through the normalized application directly.
  PropagatorConfig fwd_cfg = cfg;

  for (int it = 1; it <= n_iters; ++it) {
    SampledTrajectory psi_traj = backward_inhomogeneous(phi_traj, field, target, h, cfg);

    field.eps_ref = field.eps;
    detail::ExpansionCache cache(h.spectral_bounds(max_abs_plus_margin(field, grid)), fwd_cfg,
                                 0);
    StateVector phi = phi0;
    phi_traj.values[0] = phi;
    for (int s = 0; s < n_steps; ++s) {
      const double update =
          inner(phi, h.apply_coupling(psi_traj.values[s])).imag() / field.lambda_a[s];
      field.eps[s] = field.eps_ref[s] + update;
      const double dt = grid.points[s + 1] - grid.points[s];
      phi = apply_expansion(cache.get(dt), h, field.eps[s], phi);
      phi_traj.values[s + 1] = phi;
    }
    field.eps[n_steps] =
        field.eps_ref[n_steps] + inner(phi, h.apply_coupling(psi_traj.values[n_steps])).imag() /
                                     field.lambda_a[n_steps];

    report = evaluate_functional(phi_traj, field, target);
    report.iteration = it;
    const double drop = result.reports.back().j - report.j;
    if (drop > kSlack) {
      ++result.monotonic_violations;
      result.worst_violation = std::max(result.worst_violation, drop);
    }
    result.reports.push_back(report);
  }
  result.field = std::move(field);
  result.forward = std::move(phi_traj);
  return result;
}

/// Five-level double-Lambda model: ground levels v0, v1, v2 and excited levels
/// v'6, v'7 (indices 0..4), couplings only between the two manifolds, equal
/// scalar dipoles.
struct DoubleLambdaModel {
  static constexpr int kV0 = 0, kV1 = 1, kV2 = 2, kVp6 = 3, kVp7 = 4;
  Hamiltonian h;
  std::vector<double> energies_cm1;

  double transition_cm1(int upper, int lower) const {
    return energies_cm1[upper] - energies_cm1[lower];
  }
};

inline DoubleLambdaModel build_double_lambda(double dipole = 1.0) {
  const std::vector<double> e_cm1 = {0.0, 58.0, 116.0, 11130.0, 11172.0};
  DenseMatrix h0 = DenseMatrix::Zero(5, 5);
  for (int i = 0; i < 5; ++i) h0(i, i) = cm1_to_au(e_cm1[i]);
  DenseMatrix h1 = DenseMatrix::Zero(5, 5);
  for (int g : {0, 1, 2})
    for (int x : {3, 4}) {
      h1(g, x) = dipole;
      h1(x, g) = dipole;
    }
  return {Hamiltonian::dense(std::move(h0), std::move(h1)), e_cm1};
}

/// Ladder-climbing target over v'6, v1, v'7, v2 in four equal subintervals,
/// T_1 = T/4, T_2 = T/2, T_3 = 3T/4, edges smoothed with steepness k.
inline TargetSpec build_time_dependent_target(double total_time, double k) {
  if (!(total_time > 0.0)) throw ArgumentError("build_time_dependent_target: T must be > 0");
  return TargetSpec::time_dependent(
      {DoubleLambdaModel::kVp6, DoubleLambdaModel::kV1, DoubleLambdaModel::kVp7,
       DoubleLambdaModel::kV2},
      {0.0, 0.25 * total_time, 0.5 * total_time, 0.75 * total_time, total_time}, k);
}

struct GaussianPulse {
  double amplitude = 0.0;
  double center = 0.0;
  double sigma = 1.0;
  double carrier = 0.0;  // angular frequency in a.u.

  double operator()(double t) const {
    const double x = (t - center) / sigma;
    return amplitude * std::exp(-0.5 * x * x) * std::cos(carrier * t);
  }
  double envelope_area() const { return amplitude * sigma * std::sqrt(2.0 * std::numbers::pi); }
};

struct PulseSequence {
  std::vector<GaussianPulse> pulses;
  std::vector<std::string> warnings;

  double operator()(double t) const {
    double v = 0.0;
    for (const auto& p : pulses) v += p(t);
    return v;
  }
};

/// A pi pulse for the given transition: dipole * envelope area = pi.
inline GaussianPulse make_pi_pulse(double carrier, double dipole, double center, double sigma) {
  GaussianPulse p;
  p.carrier = carrier;
  p.center = center;
  p.sigma = sigma;
  p.amplitude = std::numbers::pi / (dipole * sigma * std::sqrt(2.0 * std::numbers::pi));
  return p;
}

/// Four pi pulses, one per quarter of [0, T], driving the ladder
/// v0 -> v'6 -> v1 -> v'7 -> v2 at the model's transition frequencies.
inline PulseSequence guess_pi_pulse_sequence(const DoubleLambdaModel& model, double total_time,
                                             double dipole = 1.0, double sigma_fraction = 0.1) {
  using M = DoubleLambdaModel;
  const std::vector<std::pair<int, int>> ladder = {
      {M::kVp6, M::kV0}, {M::kVp6, M::kV1}, {M::kVp7, M::kV1}, {M::kVp7, M::kV2}};
  PulseSequence seq;
  const double window = 0.25 * total_time;
  for (std::size_t w = 0; w < ladder.size(); ++w) {
    const double carrier = cm1_to_au(model.transition_cm1(ladder[w].first, ladder[w].second));
    const double center = (w + 0.5) * window;
    const double sigma = sigma_fraction * window;
    seq.pulses.push_back(make_pi_pulse(carrier, dipole, center, sigma));
    if (center - 4.0 * sigma < 0.0 || center + 4.0 * sigma > total_time)
      seq.warnings.push_back("pulse " + std::to_string(w) + " extends beyond [0, T]");
  }
  return seq;
}

/// Sample a field callback into a ControlField (step values at step midpoints).
inline ControlField sample_field(const std::function<double(double)>& eps, const TimeGrid& grid,
                                 double lambda_a, double lambda_b, double lambda_0) {
  ControlField f;
  const int np = grid.n_points();
  f.eps.resize(np);
  for (int s = 0; s + 1 < np; ++s) f.eps[s] = eps(0.5 * (grid.points[s] + grid.points[s + 1]));
  f.eps[np - 1] = eps(grid.total_time);
  f.eps_ref = f.eps;
  f.lambda_a.assign(np, lambda_a);
  f.lambda_b = lambda_b;
  f.lambda_0 = lambda_0;
  return f;
}

struct SpectrumPoint {
  double wavenumber = 0.0;  // cm^-1
  double magnitude = 0.0;   // |dt * DFT|
};

/// One-sided magnitude spectrum of an equidistantly sampled field.
inline std::vector<SpectrumPoint> field_spectrum(const std::vector<double>& eps, double dt) {
  const int n = static_cast<int>(eps.size());
  if (n < 2) throw ArgumentError("field_spectrum: need at least 2 samples");
  std::vector<Complex> data(n);
  for (int i = 0; i < n; ++i) data[i] = eps[i];
  fft::transform(data, -1);
  std::vector<SpectrumPoint> out(n / 2 + 1);
  for (int k = 0; k <= n / 2; ++k) {
    const double freq_au = 2.0 * std::numbers::pi * k / (n * dt);
    out[k] = {au_to_cm1(freq_au), dt * std::abs(data[k])};
  }
  return out;
}

/// Resample a (possibly non-equidistant) field trace onto a uniform grid.
inline std::vector<double> resample_field(const std::vector<double>& eps, const TimeGrid& grid,
                                          int n_uniform) {
  SampledTrajectory traj;
  traj.grid = grid;
  traj.values.reserve(eps.size());
  for (double e : eps) {
    StateVector v(1);
    v[0] = e;
    traj.values.push_back(v);
  }
  traj.validate();
  std::vector<double> out(n_uniform);
  const double dt = grid.total_time / n_uniform;
  for (int i = 0; i < n_uniform; ++i) out[i] = interpolate(traj, i * dt)[0].real();
  return out;
}

}  // namespace chebprop::oct
