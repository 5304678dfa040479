#pragma once

#include <cmath>
#include <functional>
#include <future>
#include <string>
#include <vector>

#include "chebprop/common.hpp"
#include "chebprop/hilbert.hpp"
#include "chebprop/inhom.hpp"
#include "chebprop/oct.hpp"
#include "chebprop/timegrid.hpp"

namespace chebprop::scan {

/// Convergence/cost scan of the backward inhomogeneous solve over orders and
/// step sizes, judged against one high-accuracy reference run.
struct ScanSpec {
  GridKind grid_kind = GridKind::Equidistant;
  double total_time = 0.0;
  std::vector<int> orders;
  std::vector<double> dt_list;      // equidistant cells
  std::vector<int> n_steps_list;    // Lobatto cells
  int reference_order = 3;
  double reference_dt = 0.5;        // equidistant reference step
  int reference_n_steps = 0;        // Lobatto reference
  double threshold = 1e-6;
  double tolerance = 1e-12;
  PhiMode phi_mode = PhiMode::TaylorCoeffs;
  int n_probes = 512;               // Lobatto comparison probes

  void validate() const {
    if (orders.empty()) throw ArgumentError("ScanSpec: orders list is empty");
    if (grid_kind == GridKind::Equidistant && dt_list.empty())
      throw ArgumentError("ScanSpec: dt list is empty");
    if (grid_kind == GridKind::ChebyshevLobatto && n_steps_list.empty())
      throw ArgumentError("ScanSpec: n_steps list is empty");
    if (!(total_time > 0.0)) throw ArgumentError("ScanSpec: total_time must be > 0");
    if (!(threshold > 0.0)) throw ArgumentError("ScanSpec: threshold must be > 0");
  }
};

/// The propagation problem a scan cell solves: forward trajectory under the
/// field, then the backward inhomogeneous equation defined by the target.
struct ScanProblem {
  Hamiltonian h;
  StateVector phi0;
  std::function<double(double)> field;
  oct::TargetSpec target;
  double lambda_0 = 1.0;
  double lambda_b = 0.0;
};

struct ScanRow {
  int m = 0;
  double dt = 0.0;       // step (equidistant) or max step (Lobatto)
  int n_t = 0;           // number of steps
  int n_cheb = 0;        // expansion degree (largest if several)
  std::uint64_t h_applications = 0;
  double wall_seconds = 0.0;
  bool converged = false;
  double error_vs_reference = 0.0;
};

namespace detail {

struct CellResult {
  std::vector<std::vector<double>> populations;  // [probe][level]
  RunReport report;
  TimeGrid grid;
};

inline std::vector<double> level_populations(const StateVector& v) {
  std::vector<double> p(v.size());
  for (int i = 0; i < v.size(); ++i) p[i] = std::norm(v[i]);
  return p;
}

inline CellResult run_cell(const ScanProblem& prob, const ScanSpec& spec, int m,
                           const TimeGrid& grid, const std::vector<double>& probes) {
  PropagatorConfig cfg;
  cfg.m = m;
  cfg.scheme = Scheme::Full;
  cfg.phi_mode = spec.phi_mode;
  cfg.grid = grid;
  cfg.tolerance = spec.tolerance;

  oct::ControlField field = oct::sample_field(prob.field, grid, 1.0, prob.lambda_b,
                                              prob.lambda_0);
  const SampledTrajectory fwd = oct::forward_propagate(prob.phi0, field, prob.h, cfg);
  CellResult out;
  const SampledTrajectory bwd =
      oct::backward_inhomogeneous(fwd, field, prob.target, prob.h, cfg, &out.report);

  out.populations.reserve(probes.size());
  if (grid.kind == GridKind::Equidistant) {
    const double dt = grid.dt();
    for (double t : probes) {
      const int node = static_cast<int>(std::llround(t / dt));
      if (std::abs(grid.points[node] - t) > 1e-9 * grid.total_time)
        throw ArgumentError("scan: probe time does not fall on a grid node");
      out.populations.push_back(level_populations(bwd.values[node]));
    }
  } else {
    for (double t : probes) out.populations.push_back(level_populations(interpolate(bwd, t)));
  }
  out.grid = grid;
  return out;
}

}  // namespace detail

/// Probe times shared by all cells of a scan.
inline std::vector<double> scan_probes(const ScanSpec& spec) {
  std::vector<double> probes;
  if (spec.grid_kind == GridKind::Equidistant) {
    // Compare on a common node set: the probe spacing is the smallest multiple
    // of the coarsest step that every cell step and the reference step divide.
    double coarsest = spec.reference_dt;
    for (double dt : spec.dt_list) coarsest = std::max(coarsest, dt);
    auto divides = [](double a, double b) {  // a | b
      const double q = b / a;
      return std::abs(q - std::llround(q)) < 1e-9;
    };
    double spacing = coarsest;
    for (int k = 1; k <= 100000; ++k) {
      spacing = k * coarsest;
      bool ok = divides(spec.reference_dt, spacing) && divides(spacing, spec.total_time);
      for (double dt : spec.dt_list) ok = ok && divides(dt, spacing);
      if (ok) break;
      if (k == 100000) throw ArgumentError("scan: no common probe spacing found");
    }
    const int n = static_cast<int>(std::llround(spec.total_time / spacing));
    for (int i = 0; i <= n; ++i) probes.push_back(i * spacing);
  } else {
    for (int i = 0; i <= spec.n_probes; ++i)
      probes.push_back(spec.total_time * i / spec.n_probes);
  }
  return probes;
}

inline std::vector<ScanRow> run_scan(const ScanProblem& prob, const ScanSpec& spec,
                                     int threads = 1) {
  spec.validate();
  const auto probes = scan_probes(spec);

  auto make_grid = [&](double dt, int n_steps) {
    if (spec.grid_kind == GridKind::Equidistant) {
      const int steps = static_cast<int>(std::llround(spec.total_time / dt));
      if (std::abs(steps * dt - spec.total_time) > 1e-9 * spec.total_time)
        throw ArgumentError("scan: dt must divide the total time");
      return TimeGrid::equidistant(spec.total_time, steps + 1);
    }
    return TimeGrid::chebyshev_lobatto(spec.total_time, n_steps + 1);
  };

  // Reference first: highest accuracy cell, the convergence yardstick.
  const TimeGrid ref_grid = make_grid(spec.reference_dt, spec.reference_n_steps);
  const auto reference = detail::run_cell(prob, spec, spec.reference_order, ref_grid, probes);
  double ref_scale = 1e-300;
  for (const auto& p : reference.populations)
    for (double v : p) ref_scale = std::max(ref_scale, v);

  struct Cell {
    int m;
    double dt;
    int n_steps;
  };
  std::vector<Cell> cells;
  for (int m : spec.orders) {
    if (spec.grid_kind == GridKind::Equidistant)
      for (double dt : spec.dt_list) cells.push_back({m, dt, 0});
    else
      for (int n : spec.n_steps_list) cells.push_back({m, 0.0, n});
  }

  auto evaluate = [&](const Cell& c) {
    const auto cell = detail::run_cell(prob, spec, c.m, make_grid(c.dt, c.n_steps), probes);
    ScanRow row;
    row.m = c.m;
    row.dt = spec.grid_kind == GridKind::Equidistant ? c.dt : cell.grid.max_step();
    row.n_t = cell.grid.n_steps();
    row.n_cheb = cell.report.n_cheb_single();
    row.h_applications = cell.report.h_applications;
    row.wall_seconds = cell.report.wall_seconds;
    double dev = 0.0;
    for (std::size_t i = 0; i < probes.size(); ++i)
      for (std::size_t l = 0; l < cell.populations[i].size(); ++l)
        dev = std::max(dev, std::abs(cell.populations[i][l] - reference.populations[i][l]));
    row.error_vs_reference = dev / ref_scale;
    row.converged = row.error_vs_reference < spec.threshold;
    return row;
  };

  std::vector<ScanRow> rows(cells.size());
  if (threads <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) rows[i] = evaluate(cells[i]);
  } else {
    // Waves of at most `threads` cells; rows land in spec order regardless.
    for (std::size_t base = 0; base < cells.size(); base += threads) {
      std::vector<std::future<ScanRow>> wave;
      const std::size_t end = std::min(cells.size(), base + threads);
      for (std::size_t i = base; i < end; ++i) {
        const Cell c = cells[i];
        wave.push_back(std::async(std::launch::async, [&, c] { return evaluate(c); }));
      }
      for (std::size_t i = base; i < end; ++i) rows[i] = wave[i - base].get();
    }
  }
  return rows;
}

}  // namespace chebprop::scan
