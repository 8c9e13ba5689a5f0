// Command-line front end: configuration-driven runs of the projection scheme
// with manifest-backed reproducibility.
//
// Subcommands:
//   run          initial-value simulation -> energy ledger CSV (+ errors, VTK)
//   periodic     time-periodic orbit search -> residual history + orbit report
//   hodge        decomposition verification on random fields -> report CSV
//   convergence  manufactured-solution study -> order table CSV
//   poincare     discrete Poincare constant estimation -> CSV
//   grid         grid construction + point-cloud export + gap report
//   rerun        re-execute a finished run from its manifest
//
// Exit codes: 0 success, 1 numerical failure, 2 configuration error.

#include <chrono>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"

#include "chorin/config.hpp"

namespace fs = std::filesystem;
using namespace chorin;

namespace {

struct Overrides {
  std::string config_path;
  std::string out_dir = ".";
  uint64_t seed = 0;
  bool seed_set = false;
  double tol = 0.0;
  bool tol_set = false;
  int threads = 0;  // 0 = not set
};

void apply_overrides(Config& c, const Overrides& o) {
  if (o.seed_set) {
    c.seed = o.seed;
    c.resolved["seed"] = c.seed;
  }
  if (o.tol_set) {
    c.solver.momentum_tol = o.tol;
    c.solver.projection_tol = o.tol;
    c.periodic.tol = o.tol;
    c.resolved["solver"]["momentum_tol"] = o.tol;
    c.resolved["solver"]["projection_tol"] = o.tol;
    c.resolved["periodic"]["tol"] = o.tol;
  }
  int threads = o.threads;
  if (threads == 0) {
    if (const char* env = std::getenv("CHORIN_GRID_THREADS")) {
      try {
        threads = std::max(1, std::stoi(env));
      } catch (const std::exception&) {
        throw ConfigError("CHORIN_GRID_THREADS must be a positive integer");
      }
    }
  }
  if (threads > 0) {
    c.threads = threads;
    c.resolved["threads"] = threads;
  }
}

// Writes the manifest before the body runs (so a crash leaves a record) and
// finalizes it with the output inventory afterwards.
int run_with_manifest(const std::string& command, Config& c, const std::string& out_dir,
                      const std::function<std::vector<std::string>(RunManifest&)>& body) {
  fs::create_directories(out_dir);
  RunManifest m;
  m.command = command;
  m.config = c.resolved;
  m.seed = c.seed;
  const std::string manifest_path = (fs::path(out_dir) / c.output.manifest).string();
  write_manifest(manifest_path, m);
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::string> written = body(m);
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (const auto& name : written) {
    const std::string full = (fs::path(out_dir) / name).string();
    m.outputs.push_back(
        {name, sha256_hex_file(full), static_cast<uint64_t>(fs::file_size(full))});
  }
  write_manifest(manifest_path, m);
  std::cout << "wrote " << manifest_path << " (" << written.size() << " outputs, "
            << format_double(m.wall_seconds) << " s)\n";
  return 0;
}

VectorField make_initial(const Config& c, const Grid& g) {
  if (c.initial_kind == "manufactured") {
    const ManufacturedSolution ms = c.build_manufactured();
    return sample_cell_average_vec(g, [&](const Vec3& x) { return ms.v(0.0, x); },
                                   SampleMode::interior_only);
  }
  if (c.initial_kind == "random") {
    Rng rng(c.seed);
    return random_interior_field(g, rng, c.initial_l2);
  }
  return VectorField(g);  // zero
}

int cmd_run(Config& c, const std::string& out_dir) {
  return run_with_manifest("run", c, out_dir, [&](RunManifest& m) {
    const Grid g = c.build_grid();
    m.grid_hash = g.content_hash_hex();
    HodgeSolver hodge(g);
    Stepper st(g, hodge, c.solver);
    st.init_from_field(make_initial(c, g));

    const double tau = c.tau_for_grid(g.h);
    const int steps = c.steps_for_tau(tau);
    const bool track_errors = !c.output.error_csv.empty() && c.forcing_kind == "manufactured" &&
                              c.initial_kind == "manufactured";
    ManufacturedSolution ms;
    if (c.needs_manufactured()) ms = c.build_manufactured();
    ErrorSeries es;
    if (track_errors) record_error(es, g, ms, 0.0, st.u(), st.u_tilde());

    for (int n = 0; n < steps; ++n) {
      VectorField fn(g);
      if (c.forcing_kind == "manufactured")
        fn = sample_cell_time_average_vec(g, ms.forcing_fn(c.nu), n * tau, (n + 1) * tau,
                                          SampleMode::all);
      st.step(fn, tau);
      if (track_errors) record_error(es, g, ms, (n + 1) * tau, st.u(), st.u_tilde());
    }

    std::vector<std::string> written;
    write_energy_csv((fs::path(out_dir) / c.output.energy_csv).string(), st.ledger());
    written.push_back(c.output.energy_csv);
    if (track_errors) {
      finalize_error(es);
      write_error_series_csv((fs::path(out_dir) / c.output.error_csv).string(), es);
      written.push_back(c.output.error_csv);
      std::cout << "final L2 error " << format_double(es.final_l2_u) << ", max L2 error "
                << format_double(es.max_l2_u) << "\n";
    }
    if (!c.output.vtk.empty()) {
      write_vtk((fs::path(out_dir) / c.output.vtk).string(), st.u());
      written.push_back(c.output.vtk);
    }
    if (!c.output.grid_csv.empty()) {
      std::ofstream gout((fs::path(out_dir) / c.output.grid_csv).string(), std::ios::binary);
      write_grid_csv(g, gout);
      written.push_back(c.output.grid_csv);
    }
    const auto& rows = st.ledger().rows;
    std::cout << "ran " << steps << " steps, tau " << format_double(tau) << ", final |u| "
              << format_double(rows.empty() ? st.ledger().u0_norm : rows.back().u_norm) << "\n";
    return written;
  });
}

int cmd_hodge(Config& c, const std::string& out_dir, int fields) {
  return run_with_manifest("hodge", c, out_dir, [&](RunManifest& m) {
    const Grid g = c.build_grid();
    m.grid_hash = g.content_hash_hex();
    HodgeSolver hodge(g);
    Rng rng(c.seed);
    const std::string name = "hodge_report.csv";
    auto out = detail::open_out((fs::path(out_dir) / name).string());
    detail::csv_row(out, {"field", "u_l2", "div_residual", "recon_residual", "idempotence",
                          "orthogonality", "norm_identity_gap", "iterations"});
    for (int k = 0; k < fields; ++k) {
      const VectorField u = random_interior_field(g, rng);
      const HodgeDecomposition d = hodge.decompose(u, c.solver.projection_tol,
                                                   c.solver.projection_max_iter);
      const HodgeDecomposition d2 = hodge.decompose(d.w, c.solver.projection_tol,
                                                    c.solver.projection_max_iter);
      const HodgeEstimateCheck chk = check_hodge_estimates(u, d);
      const double ul2 = l2_norm(u);
      const double idem = l2_norm(difference(d2.w, d.w));
      const double ortho = inner(d.w, gradient(d.phi));
      detail::csv_row(out, {std::to_string(k), format_double(ul2),
                            format_double(d.residual_div), format_double(d.residual_recon),
                            format_double(idem), format_double(ortho),
                            format_double(chk.w_norm_sq + chk.grad_phi_sq - chk.interior_u_sq),
                            std::to_string(d.iterations)});
    }
    out.close();
    std::cout << "verified the decomposition on " << fields << " random fields ("
              << g.n() << " grid points)\n";
    return std::vector<std::string>{name};
  });
}

int cmd_poincare(Config& c, const std::string& out_dir) {
  return run_with_manifest("poincare", c, out_dir, [&](RunManifest& m) {
    const Grid g = c.build_grid();
    m.grid_hash = g.content_hash_hex();
    const std::string name = "poincare.csv";
    auto out = detail::open_out((fs::path(out_dir) / name).string());
    detail::csv_row(out, {"constant", "value"});
    if (g.kind == GridKind::dirichlet) {
      const PoincareIEstimate p1 = estimate_poincare_first(g);
      detail::csv_row(out, {"a_hat", format_double(p1.a_hat)});
      for (int i = 0; i < 3; ++i)
        detail::csv_row(out, {"a_axis_" + std::to_string(i + 1),
                              format_double(p1.axis[static_cast<size_t>(i)])});
      std::cout << "a_hat = " << format_double(p1.a_hat) << "\n";
    }
    HodgeSolver hodge(g);
    const PoincareIIEstimate p2 = estimate_poincare_second(hodge, 1e-8, 500, c.seed);
    detail::csv_row(out, {"a_tilde", format_double(p2.a_tilde)});
    for (size_t j = 0; j < p2.class_mu.size(); ++j)
      detail::csv_row(out, {"mu_class_" + std::to_string(j + 1),
                            format_double(p2.class_mu[j])});
    std::cout << "a_tilde = " << format_double(p2.a_tilde) << "\n";
    return std::vector<std::string>{name};
  });
}

int cmd_periodic(Config& c, const std::string& out_dir) {
  return run_with_manifest("periodic", c, out_dir, [&](RunManifest& m) {
    if (c.forcing_kind != "manufactured")
      throw ConfigError("the periodic subcommand needs forcing.kind = \"manufactured\"");
    const Grid g = c.build_grid();
    m.grid_hash = g.content_hash_hex();
    HodgeSolver hodge(g);
    const ManufacturedSolution ms = c.build_manufactured();

    const double tau_req = c.tau_for_grid(g.h);
    const int t1 = std::max(1, static_cast<int>(std::llround(1.0 / tau_req)));
    const PeriodicForcing forcing = make_periodic_forcing(g, ms.forcing_fn(c.nu), t1);

    FixedPointOptions fp;
    fp.tol = c.periodic.tol;
    fp.max_iter = c.periodic.max_iter;
    fp.accel = c.periodic.accel == "anderson" ? FixedPointAccel::anderson
                                              : FixedPointAccel::picard;
    fp.anderson_window = c.periodic.anderson_window;
    if (g.kind == GridKind::dirichlet) fp.a_hat = estimate_poincare_first(g).a_hat;

    const FixedPointReport rep = find_fixed_point(hodge, forcing, fp, c.solver);
    const double per_err = orbit_periodicity_error(hodge, forcing, rep.orbit_start, c.solver);

    std::vector<std::string> written;
    write_series_csv((fs::path(out_dir) / "residual_history.csv").string(), "residual",
                     rep.history);
    written.push_back("residual_history.csv");

    {
      auto out = detail::open_out((fs::path(out_dir) / "orbit_report.csv").string());
      detail::csv_row(out, {"metric", "value"});
      detail::csv_row(out, {"steps_per_period", std::to_string(forcing.t1)});
      detail::csv_row(out, {"tau", format_double(forcing.tau)});
      detail::csv_row(out, {"alpha", format_double(forcing.alpha)});
      detail::csv_row(out, {"iterations", std::to_string(rep.iterations)});
      detail::csv_row(out, {"residual", format_double(rep.residual)});
      detail::csv_row(out, {"converged", rep.converged ? "1" : "0"});
      detail::csv_row(out, {"periodicity_error", format_double(per_err)});
      detail::csv_row(out, {"orbit_start_l2", format_double(l2_norm(rep.orbit_start))});
      detail::csv_row(out, {"max_abs", format_double(rep.max_abs)});
      detail::csv_row(out, {"beta0", format_double(rep.beta0)});
      detail::csv_row(out, {"certified_small", rep.certified_small ? "1" : "0"});
      if (fp.a_hat > 0.0) detail::csv_row(out, {"a_hat", format_double(fp.a_hat)});
      written.push_back("orbit_report.csv");
    }

    if (!rep.converged)
      throw NotConvergedError("fixed-point iteration stalled at residual " +
                                  format_double(rep.residual) + " after " +
                                  std::to_string(rep.iterations) + " iterations",
                              rep.residual);

    if (fp.a_hat > 0.0 && rep.certified_small) {
      Rng rng(c.seed + 1);
      VectorField b0 = rep.orbit_start;
      const VectorField pert =
          random_interior_field(g, rng, 0.1 * std::max(1e-3, l2_norm(rep.orbit_start)));
      add_scaled(b0, 1.0, pert);
      const int steps =
          c.periodic.contraction_steps > 0 ? c.periodic.contraction_steps : forcing.t1;
      const ContractionReport con =
          contraction_test(hodge, forcing, rep.orbit_start, b0, steps, fp.a_hat, c.solver);
      write_series_csv((fs::path(out_dir) / "contraction_ratios.csv").string(), "ratio",
                       con.ratios);
      written.push_back("contraction_ratios.csv");
      std::cout << "contraction: per-step bound " << format_double(con.per_step_bound)
                << ", fitted exponent " << format_double(con.fitted_exponent) << "\n";
    }

    std::cout << "orbit found in " << rep.iterations << " iterations, residual "
              << format_double(rep.residual) << ", periodicity error "
              << format_double(per_err) << "\n";
    return written;
  });
}

int cmd_grid(Config& c, const std::string& out_dir) {
  return run_with_manifest("grid", c, out_dir, [&](RunManifest& m) {
    const Grid g = c.build_grid();
    m.grid_hash = g.content_hash_hex();
    std::vector<std::string> written;
    const std::string name = c.output.grid_csv.empty() ? "grid.csv" : c.output.grid_csv;
    {
      std::ofstream out((fs::path(out_dir) / name).string(), std::ios::binary);
      if (!out) throw ConfigError("cannot open output file: " + name);
      write_grid_csv(g, out);
    }
    written.push_back(name);
    if (g.kind == GridKind::dirichlet) {
      const GapReport gap = boundary_gap_report(g, c.domain);
      auto out = detail::open_out((fs::path(out_dir) / "gap_report.csv").string());
      detail::csv_row(out, {"metric", "value"});
      detail::csv_row(out, {"max_boundary_gap", format_double(gap.max_boundary_gap)});
      detail::csv_row(out, {"boundary_gap_bound", format_double(gap.boundary_gap_bound)});
      detail::csv_row(out, {"max_core_boundary_gap", format_double(gap.max_core_boundary_gap)});
      detail::csv_row(out, {"core_gap_bound", format_double(gap.core_gap_bound)});
      written.push_back("gap_report.csv");
    }
    std::cout << "grid: " << g.n() << " points, " << g.interior_list.size() << " interior, "
              << g.core_list.size() << " core, hash " << g.content_hash_hex() << "\n";
    return written;
  });
}

struct ConvergenceArgs {
  std::string bc = "torus";        // "torus" | "ball"
  std::string levels;              // comma separated N (torus) or h (ball)
  std::string scaling = "h2";
  double theta = 1.0;
  double T = 0.25;
  double nu = 1.0;
  double amplitude = 1.0;
  double radius = 1.0;
  std::string solution = "swirl";  // ball only: "swirl" | "bump"
};

int cmd_convergence(const ConvergenceArgs& a, const std::string& out_dir, uint64_t seed) {
  std::vector<double> levels;
  {
    std::stringstream ss(a.levels);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) {
        try {
          levels.push_back(std::stod(tok));
        } catch (const std::exception&) {
          throw ConfigError("--levels must be a comma-separated list of numbers, got \"" + tok +
                            "\"");
        }
      }
  }
  if (levels.size() < 2) throw ConfigError("--levels needs at least two entries");
  ScalingRule rule;
  if (a.scaling == "h2")
    rule = ScalingRule::h2(a.theta);
  else if (a.scaling == "h34")
    rule = ScalingRule::h34(a.theta);
  else
    throw ConfigError("--scaling must be \"h2\" or \"h34\", got \"" + a.scaling + "\"");
  if (!(a.T > 0.0)) throw ConfigError("--T must be > 0");
  if (!(a.nu > 0.0)) throw ConfigError("--nu must be > 0");

  Config shim;  // manifest-only view of the study parameters
  shim.output.manifest = "manifest.json";
  shim.seed = seed;
  shim.resolved = {{"command_args",
                    {{"bc", a.bc}, {"levels", a.levels}, {"scaling", a.scaling},
                     {"theta", a.theta}, {"T", a.T}, {"nu", a.nu},
                     {"amplitude", a.amplitude}, {"radius", a.radius},
                     {"solution", a.solution}}}};
  return run_with_manifest("convergence", shim, out_dir, [&](RunManifest&) {
    StepperOptions opt;
    opt.nu = a.nu;
    ConvergenceTable tab;
    if (a.bc == "torus") {
      std::vector<int> Ns;
      for (double l : levels) {
        const int N = static_cast<int>(std::llround(l));
        if (std::abs(l - N) > 1e-9 || N < 4)
          throw ConfigError("--levels for the torus must be integers >= 4");
        Ns.push_back(N);
      }
      tab = convergence_study_torus(torus_trig(a.amplitude), a.nu, Ns, rule, a.T, opt);
    } else if (a.bc == "ball") {
      // "swirl" vanishes on the true sphere but is O(1) on the staircase
      // boundary of coarse levels, so its error plateaus there; "bump" is
      // supported in r < 0.55 radius and converges cleanly from coarse on.
      ManufacturedSolution ms;
      if (a.solution == "swirl")
        ms = ball_swirl_mix(a.radius, a.amplitude, 0.0, 0.0);
      else if (a.solution == "bump")
        ms = ball_bump(0.55 * a.radius, a.amplitude);
      else
        throw ConfigError("--solution must be \"swirl\" or \"bump\", got \"" + a.solution + "\"");
      tab = convergence_study_dirichlet(DomainSpec::ball({0.0, 0.0, 0.0}, a.radius), ms, a.nu,
                                        levels, rule, a.T, opt);
    } else {
      throw ConfigError("--bc must be \"torus\" or \"ball\", got \"" + a.bc + "\"");
    }
    write_convergence_csv((fs::path(out_dir) / "convergence.csv").string(), tab);
    std::cout << "fitted L2 order " << format_double(tab.fitted_l2_order) << " (fit residual "
              << format_double(tab.fit_residual) << (tab.fit_flagged ? ", FLAGGED" : "")
              << ")\n";
    for (const auto& r : tab.rows)
      std::cout << "  h " << format_double(r.h) << "  tau " << format_double(r.tau)
                << "  final L2 " << format_double(r.final_l2) << "\n";
    return std::vector<std::string>{"convergence.csv"};
  });
}

int cmd_rerun(const std::string& manifest_path, std::string out_dir) {
  const RunManifest m = load_manifest(manifest_path);
  if (out_dir.empty()) out_dir = fs::path(manifest_path).parent_path().string();
  if (out_dir.empty()) out_dir = ".";
  if (m.command == "convergence") {
    const json& a = m.config.at("command_args");
    ConvergenceArgs args;
    args.bc = a.at("bc").get<std::string>();
    args.levels = a.at("levels").get<std::string>();
    args.scaling = a.at("scaling").get<std::string>();
    args.theta = a.at("theta").get<double>();
    args.T = a.at("T").get<double>();
    args.nu = a.at("nu").get<double>();
    args.amplitude = a.at("amplitude").get<double>();
    args.radius = a.at("radius").get<double>();
    args.solution = a.value("solution", std::string("swirl"));
    return cmd_convergence(args, out_dir, m.seed);
  }
  Config c = parse_config(m.config);
  if (m.command == "run") return cmd_run(c, out_dir);
  if (m.command == "periodic") return cmd_periodic(c, out_dir);
  if (m.command == "hodge") return cmd_hodge(c, out_dir, 20);
  if (m.command == "poincare") return cmd_poincare(c, out_dir);
  if (m.command == "grid") return cmd_grid(c, out_dir);
  throw ConfigError("manifest command \"" + m.command + "\" is not rerunnable");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-difference Chorin projection scheme for 3D incompressible flow"};
  app.require_subcommand(1);
  Overrides ov;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* copt = sub->add_option("--config", ov.config_path, "JSON configuration file");
    if (needs_config) copt->required();
    sub->add_option("--out", ov.out_dir, "output directory (default: current)");
    sub->add_option("--seed", ov.seed, "override the RNG seed")
        ->each([&](const std::string&) { ov.seed_set = true; });
    sub->add_option("--tol", ov.tol, "override solver and fixed-point tolerances")
        ->each([&](const std::string&) { ov.tol_set = true; });
    sub->add_option("--threads", ov.threads,
                    "worker threads (informational; execution is sequential)");
  };

  auto* sub_run = app.add_subcommand("run", "initial-value simulation");
  add_common(sub_run, true);
  auto* sub_periodic = app.add_subcommand("periodic", "time-periodic orbit search");
  add_common(sub_periodic, true);
  auto* sub_hodge = app.add_subcommand("hodge", "decomposition verification on random fields");
  add_common(sub_hodge, true);
  int hodge_fields = 20;
  sub_hodge->add_option("--fields", hodge_fields, "number of random fields")
      ->check(CLI::PositiveNumber);
  auto* sub_poincare = app.add_subcommand("poincare", "discrete Poincare constant estimation");
  add_common(sub_poincare, true);
  auto* sub_grid = app.add_subcommand("grid", "grid construction and export");
  add_common(sub_grid, true);

  auto* sub_conv = app.add_subcommand("convergence", "manufactured-solution convergence study");
  ConvergenceArgs ca;
  sub_conv->add_option("--bc", ca.bc, "boundary handling: torus | ball");
  sub_conv->add_option("--levels", ca.levels, "comma-separated N values (torus) or h values (ball)")
      ->required();
  sub_conv->add_option("--scaling", ca.scaling, "time-step scaling: h2 | h34");
  sub_conv->add_option("--theta", ca.theta, "time-step prefactor");
  sub_conv->add_option("--T", ca.T, "time horizon");
  sub_conv->add_option("--nu", ca.nu, "viscosity");
  sub_conv->add_option("--amplitude", ca.amplitude, "manufactured-solution amplitude");
  sub_conv->add_option("--radius", ca.radius, "ball radius (bc = ball)");
  sub_conv->add_option("--solution", ca.solution,
                       "ball solution family: swirl (zero on the sphere) | bump (compactly "
                       "supported in r < 0.55 radius)");
  sub_conv->add_option("--out", ov.out_dir, "output directory (default: current)");
  sub_conv->add_option("--seed", ov.seed, "recorded in the manifest")
      ->each([&](const std::string&) { ov.seed_set = true; });

  auto* sub_rerun = app.add_subcommand("rerun", "re-execute a run from its manifest");
  std::string manifest_path, rerun_out;
  sub_rerun->add_option("--manifest", manifest_path, "manifest JSON file")->required();
  sub_rerun->add_option("--out", rerun_out, "output directory (default: next to the manifest)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (sub_rerun->parsed()) return cmd_rerun(manifest_path, rerun_out);
    if (sub_conv->parsed()) return cmd_convergence(ca, ov.out_dir, ov.seed_set ? ov.seed : 12345);
    Config c = load_config(ov.config_path);
    apply_overrides(c, ov);
    if (sub_run->parsed()) return cmd_run(c, ov.out_dir);
    if (sub_periodic->parsed()) return cmd_periodic(c, ov.out_dir);
    if (sub_hodge->parsed()) return cmd_hodge(c, ov.out_dir, hodge_fields);
    if (sub_poincare->parsed()) return cmd_poincare(c, ov.out_dir);
    if (sub_grid->parsed()) return cmd_grid(c, ov.out_dir);
    std::cerr << "config error: no subcommand selected\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
