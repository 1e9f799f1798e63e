#include <chrono>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <string>

#include <CLI11.hpp>

#include <llglab/lab.hpp>

namespace fs = std::filesystem;
using namespace llglab;

namespace {

constexpr int kChecksFailed = 1;
constexpr int kConfigError = 2;
constexpr int kSolverError = 3;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct GridOptions {
  int dim = 1;
  int points = 64;
  double length = 2.0 * std::numbers::pi;

  void add(CLI::App* app) {
    app->add_option("--dim", dim, "spatial dimension (1-3)");
    app->add_option("--points", points, "grid points per axis");
    app->add_option("--length", length, "box length");
  }
};

int run_command(const fs::path& config_path, int jobs, const std::string& out) {
  LabContext ctx = [&] {
    LabConfig c = load_config(config_path);
    apply_environment(c);
    if (!out.empty()) c.output = out;
    return prepare(std::move(c));
  }();
  const auto t0 = std::chrono::steady_clock::now();
  const auto rep = run_lab(ctx, jobs);
  for (const auto& c : rep.checks)
    std::printf("%-12s %-18s %-40s value=%s threshold=%s\n", c.status.c_str(), c.experiment.c_str(), c.check.c_str(),
                format_number(c.value).c_str(), format_number(c.threshold).c_str());
  std::printf("%zu checks, %s, %.2f s, summary in %s\n", rep.checks.size(), rep.all_pass ? "all pass" : "some failed",
              seconds_since(t0), (ctx.config.output / "summary.csv").string().c_str());
  return rep.all_pass ? 0 : kChecksFailed;
}

int verify_semigroup_command(const GridOptions& go, double lambda, double width, double c_max, const fs::path& out_dir) {
  const Grid g = make_grid(go.dim, go.points, go.length);
  const SemigroupParams sp{lambda};
  const double w = width > 0.0 ? width : g.spacing();
  const auto bump = gaussian_bump(g, w);
  const auto ts = default_decay_times(g, sp);
  const BallLattice lat = make_lattice(g);
  const double q = std::min(2.0, static_cast<double>(g.dim()));
  fs::create_directories(out_dir);
  bool all = true;
  for (double pt : {2.0, 4.0, 6.0}) {
    if (pt > 2.0 * (g.dim() + 1)) continue;
    for (int order : {0, 1}) {
      const auto rep = verify_decay(bump, 2.0, pt, q, ts, sp, order, c_max, &lat);
      CsvTable t("t,norm,compensated_ratio");
      for (std::size_t k = 0; k < ts.size(); ++k) t.row({ts[k], rep.norms[k], rep.ratio_series[k]});
      const std::string name = "decay_p2_pt" + format_number(pt) + "_q" + format_number(q) + "_order" +
                               std::to_string(order) + ".csv";
      t.write(out_dir / name);
      const bool ok = rep.pass && rep.final_decade_nonincreasing;
      all = all && ok;
      std::printf("%s %s max_ratio=%s\n", ok ? "PASS" : "FAIL", name.c_str(), format_number(rep.max_ratio).c_str());
    }
  }
  return all ? 0 : kChecksFailed;
}

int cgl_solve_command(CglConfig c, const fs::path& v0_path, const fs::path& out_dir) {
  validate(c);
  const auto v0 = tuple_from_snapshot(read_snapshot(v0_path));
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = picard_iterate(v0, c);
  fs::create_directories(out_dir);
  r.log_table().write(out_dir / "picard_log.csv");
  write_tuple_snapshot(out_dir / "u_final.snap", r.trajectory.back());
  for (const auto& w : r.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  std::printf("%s after %d iterations, ||v0||_M22 = %s, %.2f s\n", r.converged ? "converged" : "not converged",
              r.iterations, format_number(r.v0_norm).c_str(), seconds_since(t0));
  return r.converged ? 0 : kChecksFailed;
}

int llg_run_command(LlgConfig c, const SpinField& m0, int snapshot_every, const fs::path& out_dir) {
  c.output_every = snapshot_every;
  if (c.dt == 0.0) c.dt = 0.25 * stability_cap(m0.grid(), c.lambda, c.c_stab);
  validate(c, m0.grid());
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = solve_llg(m0, c);
  fs::create_directories(out_dir);
  r.ledger.table().write(out_dir / "ledger.csv");
  for (std::size_t k = 0; k < r.trajectory.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "m_%05zu.snap", k);
    write_spin_snapshot(out_dir / name, r.trajectory.states[k]);
  }
  const auto ec = check_energy_inequality(r.ledger, c.lambda);
  std::printf("%d steps of dt = %s, energy law %s (violation %s, tolerance %s), %.2f s\n", r.steps,
              format_number(r.dt).c_str(), ec.pass ? "holds" : "violated", format_number(ec.violation).c_str(),
              format_number(ec.tolerance).c_str(), seconds_since(t0));
  return ec.pass ? 0 : kChecksFailed;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"llglab: LLG and covariant CGL numerical laboratory"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run the experiments declared in a config file");
  fs::path config_path;
  int jobs = 1;
  std::string out;
  run->add_option("--config", config_path, "INI config file")->required();
  run->add_option("--jobs", jobs, "concurrent experiments")->check(CLI::PositiveNumber);
  run->add_option("--out", out, "output directory (overrides [lab] output)");

  auto* vs = app.add_subcommand("verify-semigroup", "decay ratios of the semigroup on a Gaussian bump");
  GridOptions vs_grid;
  vs_grid.dim = 2;
  vs_grid.points = 64;
  double vs_lambda = 1.0, vs_width = 0.0, vs_cmax = 50.0;
  fs::path vs_out = "semigroup_out";
  vs_grid.add(vs);
  vs->add_option("--lambda", vs_lambda, "damping");
  vs->add_option("--width", vs_width, "bump width (default: one grid spacing)");
  vs->add_option("--c-max", vs_cmax, "bound on the compensated ratio");
  vs->add_option("--out-dir", vs_out, "output directory");

  auto* cgl = app.add_subcommand("cgl", "covariant CGL mild solver");
  cgl->require_subcommand(1);
  auto* solve = cgl->add_subcommand("solve", "Picard iteration from a tuple snapshot");
  CglConfig cc;
  fs::path v0_path, cgl_out = "cgl_out";
  solve->add_option("--p", cc.p, "solution-space exponent in (3, 10/3)");
  solve->add_option("--lambda", cc.lambda, "damping");
  solve->add_option("--T", cc.T, "final time");
  solve->add_option("--steps", cc.time_steps, "output intervals");
  solve->add_option("--tol", cc.picard_tol, "Picard tolerance");
  solve->add_option("--max-iter", cc.picard_max_iter, "Picard iteration cap");
  solve->add_option("--substeps", cc.duhamel_substeps, "quadrature steps per output interval");
  solve->add_option("--v0", v0_path, "initial tuple snapshot")->required();
  solve->add_option("--out-dir", cgl_out, "output directory");

  auto* llg = app.add_subcommand("llg", "direct LLG solver");
  llg->require_subcommand(1);
  auto* lrun = llg->add_subcommand("run", "time-step the LLG equation");
  LlgConfig lc;
  lc.record_morrey = false;
  fs::path m0_path, llg_out = "llg_out";
  int snapshot_every = 1;
  std::string scheme = "rk4", kind = "equatorial_wave";
  InitialDataSpec spec;
  GridOptions l_grid;
  lrun->add_option("--lambda", lc.lambda, "damping");
  lrun->add_option("--T", lc.T, "final time");
  lrun->add_option("--dt", lc.dt, "time step (default: a quarter of the stability cap)");
  lrun->add_option("--scheme", scheme, "rk2 or rk4");
  lrun->add_option("--snapshot-every", snapshot_every, "steps between snapshots")->check(CLI::PositiveNumber);
  lrun->add_option("--out-dir", llg_out, "output directory");
  auto* m0_opt = lrun->add_option("--m0", m0_path, "initial spin snapshot");
  l_grid.add(lrun);
  lrun->add_option("--kind", kind, "constant, equatorial_wave, bump_chart or rough_mollified")->excludes(m0_opt);
  lrun->add_option("--amplitude", spec.amplitude, "initial-data amplitude");
  lrun->add_option("--wavenumber", spec.wavenumber, "equatorial wavenumber");
  lrun->add_option("--width", spec.width, "bump width as a fraction of the box");
  lrun->add_option("--mollification-k", spec.mollification_k, "mollifier scale");
  lrun->add_option("--seed", spec.seed, "random seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return run_command(config_path, jobs, out);
    if (*vs) return verify_semigroup_command(vs_grid, vs_lambda, vs_width, vs_cmax, vs_out);
    if (*solve) return cgl_solve_command(cc, v0_path, cgl_out);
    if (*lrun) {
      lc.scheme = parse_scheme(scheme);
      const SpinField m0 = m0_path.empty()
                               ? [&] {
                                   spec.kind = parse_initial_kind(kind);
                                   return generate_initial_data(spec, make_grid(l_grid.dim, l_grid.points, l_grid.length));
                                 }()
                               : spin_from_snapshot(read_snapshot(m0_path));
      return llg_run_command(lc, m0, snapshot_every, llg_out);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const SnapshotError& e) {
    std::fprintf(stderr, "snapshot error: %s\n", e.what());
    return kConfigError;
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "invalid argument: %s\n", e.what());
    return kConfigError;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kSolverError;
  }
  return 0;
}
