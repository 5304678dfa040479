#pragma once

#include <json.hpp>

#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "chebprop/common.hpp"
#include "chebprop/hilbert.hpp"
#include "chebprop/inhom.hpp"
#include "chebprop/models.hpp"
#include "chebprop/oct.hpp"
#include "chebprop/timegrid.hpp"

namespace chebprop::io {

using nlohmann::json;

inline json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path);
  json j;
  try {
    j = json::parse(in, nullptr, true, true);  // allow comments
  } catch (const json::parse_error& e) {
    throw ConfigError("parse error in " + path + ": " + e.what());
  }
  return j;
}

template <typename T>
T require(const json& j, const std::string& key) {
  if (!j.contains(key)) throw ConfigError("missing config key: " + key);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for key '" + key + "': " + e.what());
  }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for key '" + key + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Model files
// ---------------------------------------------------------------------------

inline DenseMatrix parse_matrix(const json& j, const std::string& key) {
  const auto rows = require<std::vector<std::vector<std::vector<double>>>>(j, key);
  const int n = static_cast<int>(rows.size());
  DenseMatrix m(n, n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != n)
      throw ConfigError("matrix '" + key + "' is not square");
    for (int k = 0; k < n; ++k) {
      if (rows[i][k].size() != 2)
        throw ConfigError("matrix '" + key + "' entries must be [re, im] pairs");
      m(i, k) = Complex(rows[i][k][0], rows[i][k][1]);
    }
  }
  return m;
}

inline Eigen::VectorXd parse_potential(const json& j, const SpatialGrid& grid, double mass) {
  const auto form = require<std::string>(j, "form");
  if (form == "morse")
    return models::morse_potential(grid, require<double>(j, "d_e"), require<double>(j, "a"),
                                   require<double>(j, "r_e"), get_or(j, "offset", 0.0));
  if (form == "harmonic")
    return models::harmonic_potential(grid, mass, require<double>(j, "omega"),
                                      require<double>(j, "r_e"), get_or(j, "offset", 0.0));
  if (form == "constant") return models::constant_potential(grid, get_or(j, "value", 0.0));
  if (form == "table") {
    const auto vals = require<std::vector<double>>(j, "values");
    if (static_cast<int>(vals.size()) != grid.n_points)
      throw ConfigError("table potential length != grid points");
    return Eigen::Map<const Eigen::VectorXd>(vals.data(), vals.size());
  }
  throw ConfigError("unknown potential form: " + form);
}

/// Model definition: named builtin or explicit dense / fourier_grid spec.
inline Hamiltonian parse_model(const json& spec) {
  const json j = spec.is_string() ? load_json(spec.get<std::string>()) : spec;
  const auto kind = require<std::string>(j, "kind");
  if (kind == "dense") {
    DenseMatrix h0 = parse_matrix(j, "h0");
    DenseMatrix h1 = j.contains("h1") ? parse_matrix(j, "h1") : DenseMatrix();
    return Hamiltonian::dense(std::move(h0), std::move(h1));
  }
  if (kind == "fourier_grid") {
    const json& g = j.at("grid");
    const SpatialGrid grid(require<int>(g, "n_points"), require<double>(g, "r_min"),
                           require<double>(g, "r_max"));
    const double mass = require<double>(j, "mass");
    std::vector<Eigen::VectorXd> pots;
    for (const auto& ch : j.at("channels")) pots.push_back(parse_potential(ch.at("potential"), grid, mass));
    std::vector<Coupling> couplings;
    for (const auto& c : get_or(j, "couplings", json::array()))
      couplings.push_back({require<int>(c, "i"), require<int>(c, "j"), require<double>(c, "mu")});
    return Hamiltonian::fourier_grid(grid, mass, std::move(pots), std::move(couplings));
  }
  if (kind == "double_lambda") return oct::build_double_lambda(get_or(j, "dipole", 1.0)).h;
  if (kind == "double_lambda_rwa")
    return models::build_double_lambda_rwa(get_or(j, "detuning_cm1", 2.0));
  if (kind == "raman_surrogate") return models::build_raman_surrogate(get_or(j, "n_points", 128));
  throw ConfigError("unknown model kind: " + kind);
}

// ---------------------------------------------------------------------------
// Run configuration pieces
// ---------------------------------------------------------------------------

inline TimeGrid parse_grid(const json& j) {
  const auto kind = get_or<std::string>(j, "kind", "equidistant");
  double total = 0.0;
  if (j.contains("total_time_au"))
    total = require<double>(j, "total_time_au");
  else if (j.contains("total_time_ps"))
    total = ps_to_au(require<double>(j, "total_time_ps"));
  else if (j.contains("dt_au") && j.contains("n_steps"))
    total = require<double>(j, "dt_au") * require<int>(j, "n_steps");
  else
    throw ConfigError("grid: need total_time_au, total_time_ps, or dt_au with n_steps");
  const int n_steps = require<int>(j, "n_steps");
  if (kind == "equidistant") return TimeGrid::equidistant(total, n_steps + 1);
  if (kind == "chebyshev_lobatto") return TimeGrid::chebyshev_lobatto(total, n_steps + 1);
  throw ConfigError("unknown grid kind: " + kind);
}

inline PropagatorConfig parse_propagator(const json& j, TimeGrid grid) {
  PropagatorConfig cfg;
  cfg.grid = std::move(grid);
  cfg.m = get_or(j, "order", 1);
  const auto scheme = get_or<std::string>(j, "scheme", "full");
  if (scheme == "full")
    cfg.scheme = Scheme::Full;
  else if (scheme == "taylor_approx")
    cfg.scheme = Scheme::TaylorApprox;
  else if (scheme == "symmetrical")
    cfg.scheme = Scheme::Symmetrical;
  else
    throw ConfigError("unknown scheme: " + scheme);
  const auto mode = get_or<std::string>(j, "phi_mode", "taylor");
  if (mode == "taylor")
    cfg.phi_mode = PhiMode::TaylorCoeffs;
  else if (mode == "uniform")
    cfg.phi_mode = PhiMode::UniformCheb;
  else
    throw ConfigError("unknown phi_mode: " + mode);
  cfg.tolerance = get_or(j, "tolerance", 1e-12);
  cfg.eps_switch = get_or(j, "eps_switch", 0.5);
  cfg.n_cheb_sample = get_or(j, "n_cheb_sample", 16);
  if (j.contains("fixed_n_cheb")) cfg.fixed_n_cheb = require<int>(j, "fixed_n_cheb");
  cfg.validate();
  return cfg;
}

inline StateVector parse_initial_state(const json& j, const Hamiltonian& h) {
  const auto kind = require<std::string>(j, "kind");
  if (kind == "level") {
    StateVector v = StateVector::Zero(h.dim());
    const int idx = require<int>(j, "index");
    if (idx < 0 || idx >= h.dim()) throw ConfigError("initial_state: index out of range");
    v[idx] = 1.0;
    return v;
  }
  if (kind == "channel_eigenstate") {
    const int channel = require<int>(j, "channel");
    const int index = require<int>(j, "index");
    return models::channel_eigenstates(h, channel, index + 1).states.at(index);
  }
  if (kind == "amplitudes") {
    const auto re = require<std::vector<double>>(j, "re");
    const auto im = get_or(j, "im", std::vector<double>(re.size(), 0.0));
    if (static_cast<int>(re.size()) != h.dim() || im.size() != re.size())
      throw ConfigError("initial_state: amplitude length mismatch");
    StateVector v(h.dim());
    for (int i = 0; i < h.dim(); ++i) v[i] = Complex(re[i], im[i]);
    return v / norm_of(v);
  }
  throw ConfigError("unknown initial_state kind: " + kind);
}

/// Field spec -> time callback.
inline std::function<double(double)> parse_field(const json& j, const Hamiltonian& h,
                                                 double total_time) {
  const auto kind = get_or<std::string>(j, "kind", "none");
  if (kind == "none") return [](double) { return 0.0; };
  if (kind == "constant") {
    const double v = require<double>(j, "value");
    return [v](double) { return v; };
  }
  if (kind == "gaussian_pulse") {
    oct::GaussianPulse p;
    p.amplitude = require<double>(j, "amplitude");
    p.center = require<double>(j, "center_au");
    p.sigma = require<double>(j, "sigma_au");
    p.carrier = j.contains("carrier_cm1") ? cm1_to_au(require<double>(j, "carrier_cm1"))
                                          : get_or(j, "carrier_au", 0.0);
    return p;
  }
  if (kind == "pi_pulse_sequence") {
    auto model = oct::build_double_lambda(get_or(j, "dipole", 1.0));
    if (model.h.dim() != h.dim())
      throw ConfigError("pi_pulse_sequence guess requires the double_lambda model");
    return oct::guess_pi_pulse_sequence(model, total_time, get_or(j, "dipole", 1.0),
                                        get_or(j, "sigma_fraction", 0.1));
  }
  throw ConfigError("unknown field kind: " + kind);
}

inline oct::Projector parse_projector(const json& j, const Hamiltonian& h) {
  if (j.contains("levels")) return oct::Projector::levels(require<std::vector<int>>(j, "levels"), h.dim());
  if (j.contains("channels")) {
    if (h.is_dense()) throw ConfigError("projector: 'channels' needs a grid model");
    return oct::Projector::channels(require<std::vector<int>>(j, "channels"), h.n_channels(),
                                    h.grid().n_points);
  }
  if (j.contains("channel_state")) {
    const auto& cs = j.at("channel_state");
    const int channel = require<int>(cs, "channel");
    const int index = require<int>(cs, "index");
    return oct::Projector::rank1(
        models::channel_eigenstates(h, channel, index + 1).states.at(index));
  }
  throw ConfigError("projector: need 'levels', 'channels', or 'channel_state'");
}

inline oct::TargetSpec parse_target(const json& j, const Hamiltonian& h, double total_time) {
  const auto kind = require<std::string>(j, "kind");
  if (kind == "final_time") return oct::TargetSpec::final_time(parse_projector(j.at("target"), h));
  if (kind == "state_constraint")
    return oct::TargetSpec::state_constraint(parse_projector(j.at("target"), h),
                                             parse_projector(j.at("allow"), h));
  if (kind == "time_dependent") {
    const double k = require<double>(j, "steepness_au");
    const auto levels = get_or(j, "window_levels",
                               std::vector<int>{oct::DoubleLambdaModel::kVp6,
                                                oct::DoubleLambdaModel::kV1,
                                                oct::DoubleLambdaModel::kVp7,
                                                oct::DoubleLambdaModel::kV2});
    std::vector<double> bounds;
    if (j.contains("switch_times_au")) {
      bounds = require<std::vector<double>>(j, "switch_times_au");
      bounds.insert(bounds.begin(), 0.0);
      bounds.push_back(total_time);
    } else {
      for (std::size_t i = 0; i <= levels.size(); ++i)
        bounds.push_back(total_time * static_cast<double>(i) / levels.size());
    }
    return oct::TargetSpec::time_dependent(levels, bounds, k);
  }
  throw ConfigError("unknown target kind: " + kind);
}

// ---------------------------------------------------------------------------
// Output writers
// ---------------------------------------------------------------------------

inline void write_trajectory_csv(const std::string& path, const SampledTrajectory& traj,
                                 int stride = 1) {
  traj.validate();
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write: " + path);
  out << "t,norm";
  for (int d = 0; d < traj.dim(); ++d) out << ",re_" << d << ",im_" << d;
  out << "\n";
  out << std::setprecision(15) << std::scientific;
  for (int n = 0; n < traj.grid.n_points(); n += stride) {
    out << traj.grid.points[n] << "," << norm_of(traj.values[n]);
    for (int d = 0; d < traj.dim(); ++d)
      out << "," << traj.values[n][d].real() << "," << traj.values[n][d].imag();
    out << "\n";
  }
}

inline SampledTrajectory read_trajectory_csv(const std::string& path, GridKind kind,
                                             double total_time) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open: " + path);
  std::string line;
  std::getline(in, line);  // header
  SampledTrajectory traj;
  std::vector<double> times;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    times.push_back(row[0]);
    const int dim = static_cast<int>((row.size() - 2) / 2);
    StateVector v(dim);
    for (int d = 0; d < dim; ++d) v[d] = Complex(row[2 + 2 * d], row[3 + 2 * d]);
    traj.values.push_back(std::move(v));
  }
  traj.grid.kind = kind;
  traj.grid.total_time = total_time;
  traj.grid.points = std::move(times);
  return traj;
}

/// Channel populations (grid models) or level populations (dense models).
inline void write_populations_csv(const std::string& path, const SampledTrajectory& traj,
                                  const Hamiltonian& h, int stride = 1) {
  traj.validate();
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write: " + path);
  const int nc = h.n_channels();
  const int block = h.is_dense() ? 1 : h.grid().n_points;
  out << "t";
  for (int c = 0; c < nc; ++c) out << ",pop_" << c;
  out << "\n";
  out << std::setprecision(15) << std::scientific;
  for (int n = 0; n < traj.grid.n_points(); n += stride) {
    out << traj.grid.points[n];
    for (int c = 0; c < nc; ++c)
      out << "," << traj.values[n].segment(c * block, block).squaredNorm();
    out << "\n";
  }
}

inline void write_field_csv(const std::string& path, const TimeGrid& grid,
                            const std::vector<double>& eps, int stride = 1) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write: " + path);
  out << "t,epsilon\n" << std::setprecision(15) << std::scientific;
  for (int n = 0; n < grid.n_points(); n += stride)
    out << grid.points[n] << "," << eps[n] << "\n";
}

inline void write_spectrum_csv(const std::string& path,
                               const std::vector<oct::SpectrumPoint>& spec) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write: " + path);
  out << "wavenumber_cm1,magnitude\n" << std::setprecision(15) << std::scientific;
  for (const auto& p : spec) out << p.wavenumber << "," << p.magnitude << "\n";
}

inline void write_functionals_csv(const std::string& path,
                                  const std::vector<oct::FunctionalReport>& reports) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write: " + path);
  out << "iteration,J,J0,Ja,Jb,J_norm\n" << std::setprecision(15) << std::scientific;
  for (const auto& r : reports)
    out << r.iteration << "," << r.j << "," << r.j0 << "," << r.ja << "," << r.jb << ","
        << r.j_norm << "\n";
}

inline json report_to_json(const RunReport& r) {
  json j;
  j["scheme"] = r.scheme == Scheme::Full          ? "full"
                : r.scheme == Scheme::TaylorApprox ? "taylor_approx"
                                                   : "symmetrical";
  j["m"] = r.m;
  j["N_t"] = r.n_steps;
  if (r.dt > 0.0) j["dt"] = r.dt;
  j["dt_max"] = r.dt_max;
  j["N_cheb"] = r.n_cheb;
  j["H_applications"] = r.h_applications;
  j["wall_seconds"] = r.wall_seconds;
  return j;
}

inline void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace chebprop::io
