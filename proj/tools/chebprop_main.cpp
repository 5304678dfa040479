// Command-line front end: single propagations, convergence/cost scans,
// optimal-control runs, field spectra, and the oracle-backed selfcheck.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>

#include "chebprop/io.hpp"
#include "chebprop/oct.hpp"
#include "chebprop/scan.hpp"
#include "chebprop/selfcheck.hpp"

namespace {

using namespace chebprop;
using nlohmann::json;

struct GlobalOpts {
  std::string config;
  std::string out_dir = ".";
  bool json_output = false;
  int threads = 1;
  unsigned seed = 12345;
};

std::string out_path(const GlobalOpts& g, const std::string& name) {
  std::filesystem::create_directories(g.out_dir);
  return (std::filesystem::path(g.out_dir) / name).string();
}

int run_propagate(const GlobalOpts& g) {
  const json cfg_json = io::load_json(g.config);
  const Hamiltonian h = io::parse_model(cfg_json.at("model"));
  const TimeGrid grid = io::parse_grid(cfg_json.at("grid"));
  PropagatorConfig cfg = io::parse_propagator(io::get_or(cfg_json, "propagator", json::object()),
                                              grid);
  const StateVector psi0 = io::parse_initial_state(cfg_json.at("initial_state"), h);
  const auto field_fn = io::parse_field(io::get_or(cfg_json, "field", json::object()), h,
                                        grid.total_time);
  const auto direction = io::get_or<std::string>(cfg_json, "direction", "forward");
  const json inhom = io::get_or(cfg_json, "inhomogeneity", json::object());
  const auto inhom_kind = io::get_or<std::string>(inhom, "kind", "none");

  SampledTrajectory traj;
  RunReport report;
  if (inhom_kind == "adjoint_source") {
    if (direction != "backward")
      throw ConfigError("inhomogeneity 'adjoint_source' requires direction 'backward'");
    const auto target = io::parse_target(inhom.at("target"), h, grid.total_time);
    oct::ControlField field =
        oct::sample_field(field_fn, grid, 1.0, io::get_or(inhom, "lambda_b", 0.0),
                          io::get_or(inhom, "lambda_0", 1.0));
    const SampledTrajectory fwd = oct::forward_propagate(psi0, field, h, cfg);
    traj = oct::backward_inhomogeneous(fwd, field, target, h, cfg, &report);
  } else if (inhom_kind == "none") {
    const auto dir = direction == "backward" ? TimeDirection::Backward : TimeDirection::Forward;
    traj = propagate(psi0, InhomogeneousTerm::none(), h, FieldSeries::callback(field_fn), cfg,
                     dir, &report);
  } else {
    throw ConfigError("unknown inhomogeneity kind: " + inhom_kind);
  }

  const json out_spec = io::get_or(cfg_json, "output", json::object());
  const int stride = io::get_or(out_spec, "stride", 1);
  io::write_trajectory_csv(out_path(g, io::get_or<std::string>(out_spec, "trajectory",
                                                               "trajectory.csv")),
                           traj, stride);
  io::write_populations_csv(out_path(g, io::get_or<std::string>(out_spec, "populations",
                                                                "populations.csv")),
                            traj, h, stride);
  const json rep = io::report_to_json(report);
  io::write_json(out_path(g, io::get_or<std::string>(out_spec, "report", "report.json")), rep);
  std::cout << (g.json_output ? rep.dump(2) : "wrote trajectory, populations, report to " +
                                                  g.out_dir)
            << std::endl;
  return 0;
}

scan::ScanProblem parse_scan_problem(const json& j, const Hamiltonian& h, double total_time) {
  const json w = io::get_or(j, "weights", json::object());
  return scan::ScanProblem{
      h,
      io::parse_initial_state(j.at("initial_state"), h),
      io::parse_field(io::get_or(j, "field", json::object()), h, total_time),
      io::parse_target(j.at("target"), h, total_time),
      io::get_or(w, "lambda_0", 1.0),
      io::get_or(w, "lambda_b", 1e-3)};
}

int run_scan(const GlobalOpts& g) {
  const json cfg = io::load_json(g.config);
  const Hamiltonian h = io::parse_model(cfg.at("model"));
  scan::ScanSpec spec;
  spec.total_time = cfg.contains("total_time_ps")
                        ? ps_to_au(io::require<double>(cfg, "total_time_ps"))
                        : io::require<double>(cfg, "total_time_au");
  const auto kind = io::get_or<std::string>(cfg, "grid_kind", "equidistant");
  spec.grid_kind = kind == "chebyshev_lobatto" ? GridKind::ChebyshevLobatto
                                               : GridKind::Equidistant;
  spec.orders = io::require<std::vector<int>>(cfg, "orders");
  spec.dt_list = io::get_or(cfg, "dt_list_au", std::vector<double>{});
  spec.n_steps_list = io::get_or(cfg, "n_steps_list", std::vector<int>{});
  const json ref = io::get_or(cfg, "reference", json::object());
  spec.reference_order = io::get_or(ref, "order", 3);
  spec.reference_dt = io::get_or(ref, "dt_au", 0.5);
  spec.reference_n_steps = io::get_or(ref, "n_steps", 0);
  spec.threshold = io::get_or(cfg, "threshold", 1e-6);
  spec.tolerance = io::get_or(cfg, "tolerance", 1e-12);
  spec.phi_mode = io::get_or<std::string>(cfg, "phi_mode", "taylor") == "uniform"
                      ? PhiMode::UniformCheb
                      : PhiMode::TaylorCoeffs;

  const auto prob = parse_scan_problem(cfg, h, spec.total_time);
  const auto rows = scan::run_scan(prob, spec, g.threads);

  const std::string path = out_path(g, io::get_or<std::string>(cfg, "output", "scan.csv"));
  std::ofstream out(path);
  out << "m,dt,N_t,N_cheb,H_applications,wall_seconds,converged,error_vs_reference\n"
      << std::setprecision(15);
  for (const auto& r : rows)
    out << r.m << "," << r.dt << "," << r.n_t << "," << r.n_cheb << "," << r.h_applications
        << "," << r.wall_seconds << "," << (r.converged ? 1 : 0) << ","
        << r.error_vs_reference << "\n";
  if (g.json_output) {
    json j = json::array();
    for (const auto& r : rows)
      j.push_back({{"m", r.m},
                   {"dt", r.dt},
                   {"N_t", r.n_t},
                   {"N_cheb", r.n_cheb},
                   {"H_applications", r.h_applications},
                   {"converged", r.converged},
                   {"error_vs_reference", r.error_vs_reference}});
    std::cout << j.dump(2) << std::endl;
  } else {
    std::cout << "wrote " << path << std::endl;
  }
  return 0;
}

int run_oct(const GlobalOpts& g) {
  const json cfg_json = io::load_json(g.config);
  const Hamiltonian h = io::parse_model(cfg_json.at("model"));
  const TimeGrid grid = io::parse_grid(cfg_json.at("grid"));
  PropagatorConfig cfg = io::parse_propagator(io::get_or(cfg_json, "propagator", json::object()),
                                              grid);
  const StateVector phi0 = io::parse_initial_state(cfg_json.at("initial_state"), h);
  const auto target = io::parse_target(cfg_json.at("target"), h, grid.total_time);
  const json w = io::get_or(cfg_json, "weights", json::object());
  const auto guess_fn = io::parse_field(io::get_or(cfg_json, "guess", json::object()), h,
                                        grid.total_time);
  oct::ControlField field =
      oct::sample_field(guess_fn, grid, io::get_or(w, "lambda_a", 1.0),
                        io::get_or(w, "lambda_b", 0.0), io::get_or(w, "lambda_0", 1.0));
  const int iterations = io::get_or(cfg_json, "iterations", 0);

  const auto result = oct::krotov_iterate(phi0, std::move(field), target, h, cfg, iterations);

  const json out_spec = io::get_or(cfg_json, "output", json::object());
  const int stride = io::get_or(out_spec, "stride", 1);
  io::write_functionals_csv(
      out_path(g, io::get_or<std::string>(out_spec, "functionals", "functionals.csv")),
      result.reports);
  io::write_field_csv(out_path(g, io::get_or<std::string>(out_spec, "field", "field.csv")),
                      grid, result.field.eps, stride);
  io::write_populations_csv(
      out_path(g, io::get_or<std::string>(out_spec, "populations", "populations.csv")),
      result.forward, h, stride);
  std::vector<double> eps_uniform = result.field.eps;
  double dt_uniform = 0.0;
  if (grid.kind == GridKind::Equidistant) {
    dt_uniform = grid.dt();
  } else {
    eps_uniform = oct::resample_field(result.field.eps, grid, grid.n_points());
    dt_uniform = grid.total_time / grid.n_points();
  }
  const auto spectrum = oct::field_spectrum(eps_uniform, dt_uniform);
  io::write_spectrum_csv(out_path(g, io::get_or<std::string>(out_spec, "spectrum",
                                                             "spectrum.csv")),
                         spectrum);

  json summary;
  summary["iterations"] = iterations;
  summary["monotonic"] = result.monotonic_violations == 0;
  summary["monotonic_violations"] = result.monotonic_violations;
  summary["worst_violation"] = result.worst_violation;
  const auto& last = result.reports.back();
  summary["final"] = {{"J", last.j},       {"J0", last.j0},         {"Ja", last.ja},
                      {"Jb", last.jb},     {"J_norm", last.j_norm},
                      {"Jb_normalized", grid.total_time > 0.0 && field.lambda_b != 0.0
                                            ? last.jb / (result.field.lambda_b * grid.total_time)
                                            : 0.0}};
  io::write_json(out_path(g, io::get_or<std::string>(out_spec, "summary", "oct_summary.json")),
                 summary);
  std::cout << (g.json_output ? summary.dump(2)
                              : "final J_norm = " + std::to_string(last.j_norm))
            << std::endl;
  return 0;
}

int run_spectrum(const GlobalOpts& g) {
  const json cfg = io::load_json(g.config);
  std::vector<double> eps;
  double dt = 0.0;
  if (cfg.contains("field_csv")) {
    std::ifstream in(io::require<std::string>(cfg, "field_csv"));
    if (!in) throw ConfigError("cannot open field csv");
    std::string line;
    std::getline(in, line);
    std::vector<double> times;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto comma = line.find(',');
      times.push_back(std::stod(line.substr(0, comma)));
      eps.push_back(std::stod(line.substr(comma + 1)));
    }
    if (times.size() < 2) throw ConfigError("field csv too short");
    dt = times[1] - times[0];
  } else {
    const Hamiltonian h = io::parse_model(cfg.at("model"));
    const TimeGrid grid = io::parse_grid(cfg.at("grid"));
    const auto fn = io::parse_field(cfg.at("field"), h, grid.total_time);
    dt = grid.dt();
    eps.resize(grid.n_points());
    for (int n = 0; n < grid.n_points(); ++n) eps[n] = fn(grid.points[n]);
  }
  const auto spectrum = oct::field_spectrum(eps, dt);
  const std::string path = out_path(g, io::get_or<std::string>(cfg, "output", "spectrum.csv"));
  io::write_spectrum_csv(path, spectrum);
  std::cout << "wrote " << path << std::endl;
  return 0;
}

int run_selfcheck(const GlobalOpts& g, bool inject_fault) {
  selfcheck::Options opt;
  opt.seed = g.seed;
  opt.corrupt_coefficient = inject_fault;
  const auto results = selfcheck::run_all(opt);
  bool all_pass = true;
  json j = json::array();
  for (const auto& r : results) {
    all_pass = all_pass && r.pass;
    if (g.json_output)
      j.push_back({{"name", r.name}, {"pass", r.pass}, {"worst", r.worst}, {"limit", r.limit}});
    else
      std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.name << "  (worst " << r.worst
                << ", limit " << r.limit << ")\n";
  }
  if (g.json_output) std::cout << j.dump(2) << std::endl;
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chebyshev propagators for inhomogeneous Schrodinger equations"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--out", g.out_dir, "output directory");
  app.add_flag("--json", g.json_output, "machine-readable output");
  app.add_option("--threads", g.threads, "worker threads for scans");
  app.add_option("--seed", g.seed, "seed for randomized checks");

  auto* propagate_cmd = app.add_subcommand("propagate", "single propagation run");
  propagate_cmd->add_option("--config", g.config, "run configuration")->required();
  auto* scan_cmd = app.add_subcommand("scan", "convergence/cost scan");
  scan_cmd->add_option("--config", g.config, "scan specification")->required();
  auto* oct_cmd = app.add_subcommand("oct", "iterative optimal control");
  oct_cmd->add_option("--config", g.config, "optimization configuration")->required();
  auto* spectrum_cmd = app.add_subcommand("spectrum", "field spectrum");
  spectrum_cmd->add_option("--config", g.config, "spectrum configuration")->required();
  auto* selfcheck_cmd = app.add_subcommand("selfcheck", "oracle-backed invariant suite");
  bool inject_fault = false;
  selfcheck_cmd->add_flag("--inject-fault", inject_fault,
                          "corrupt one coefficient (harness test)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (propagate_cmd->parsed()) return run_propagate(g);
    if (scan_cmd->parsed()) return run_scan(g);
    if (oct_cmd->parsed()) return run_oct(g);
    if (spectrum_cmd->parsed()) return run_spectrum(g);
    if (selfcheck_cmd->parsed()) return run_selfcheck(g, inject_fault);
  } catch (const chebprop::ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 2;
  } catch (const chebprop::Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 3;
  }
  return 0;
}
