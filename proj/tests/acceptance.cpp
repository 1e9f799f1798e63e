#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <llglab/lab.hpp>

#include "morrey_oracle.hpp"
#include "test_support.hpp"

using namespace llglab;
namespace fs = std::filesystem;
constexpr double kPi = std::numbers::pi;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double rel_diff(const ComplexField& a, const ComplexField& b) {
  return test::max_abs_diff(a, b) / std::max(sup_norm(b), 1e-300);
}

Outcome spectral_exactness() {
  double worst_eig = 0.0, worst_law = 0.0;
  const SemigroupParams sp{0.7};
  for (int dim : {1, 2, 3}) {
    const Grid g = make_grid(dim, dim == 3 ? 16 : 32, 2 * kPi);
    for (int k : {1, 3, 7}) {
      const auto e = ComplexField::generate(g, [&](const auto& x) { return std::exp(Complex(0.0, k * x[0])); });
      for (double t : {1e-3, 1e-2, 0.1}) {
        const Complex f = std::exp(Complex(-sp.lambda, 1.0) * static_cast<double>(k * k) * t);
        worst_eig = std::max(worst_eig, rel_diff(apply_semigroup(e, t, sp), f * e));
      }
    }
    const auto r = test::random_band_limited(g, 5, 10 + static_cast<std::uint64_t>(dim));
    for (auto [t, s] : {std::pair{0.01, 0.02}, std::pair{0.1, 0.3}})
      worst_law = std::max(worst_law, rel_diff(apply_semigroup(apply_semigroup(r, t, sp), s, sp), apply_semigroup(r, t + s, sp)));
  }
  return {worst_eig <= 1e-12 && worst_law <= 1e-12, "eigenfunction " + num(worst_eig) + ", law " + num(worst_law)};
}

Outcome morrey_oracle() {
  int fields = 0, mismatches = 0;
  std::uint64_t seed = 500;
  for (int dim : {1, 2})
    for (int n : {8, 16})
      for (int f = 0; f < 20; ++f) {
        const Grid g = make_grid(dim, n, 2 * kPi);
        std::mt19937_64 rng(++seed);
        std::exponential_distribution<double> ex(1.0);
        ScalarField mag(g);
        for (auto& v : mag.values()) v = ex(rng);
        const double p = f % 2 ? 2.0 : 3.2;
        const double q = std::min(2.0, static_cast<double>(dim));
        if (morrey_norm(mag, p, q, make_lattice(g, 1)).value != test::brute_morrey(mag, p, q).value) ++mismatches;
        ++fields;
      }
  return {mismatches == 0, std::to_string(fields) + " fields on 4 grids, " + std::to_string(mismatches) + " mismatches"};
}

Outcome decay_lemmas() {
  const auto s = decay_suite(make_grid(2, 64, 2 * kPi), 1.0, 50.0);
  double worst = 0.0;
  int bad = 0;
  for (const auto& r : s.rows) {
    worst = std::max(worst, r.report.max_ratio);
    bad += r.pass ? 0 : 1;
  }
  return {s.pass, std::to_string(s.rows.size()) + " cases, max ratio " + num(worst) + ", failing " + std::to_string(bad)};
}

Outcome identities() {
  const Grid g = make_grid(2, 64, 2 * kPi);
  const double lambda = 0.7;
  double worst = 0.0, div = 0.0, eq = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto m = test::random_admissible_spin(g, 0.4, seed);
    const auto fr = build_frame(m);
    const auto dt_m = llg_rhs(m, lambda);
    const auto st = derive_gauge(m, dt_m, fr);
    const auto r = check_identities(m, fr, st, lambda);
    worst = std::max({worst, r.torsion, r.curvature, r.tension, r.u0_eq});
    eq = std::max(eq, check_equivalent_form(m, dt_m, lambda));
    const auto cf = coulomb_gauge_fix(st);
    ScalarField d(g);
    for (int k = 0; k < g.dim(); ++k) d += derivative(cf.a[static_cast<std::size_t>(k)], k, 1);
    div = std::max(div, sup_norm(d));
  }
  return {worst <= 1e-8 && eq <= 1e-8 && div <= 1e-10,
          "structural " + num(worst) + ", equivalent form " + num(eq) + ", div a " + num(div)};
}

Outcome exponent_windows() {
  int wrong = 0;
  for (int i = 0; i < 200; ++i) {
    const double p = 2.5 + 1.5 * (i + 0.5) / 200.0;
    if (exponent_window_check(p).valid != (p > 3.0 && p < 10.0 / 3.0)) ++wrong;
  }
  const auto at3 = exponent_window_check(3.0).first_failure;
  const auto at103 = exponent_window_check(10.0 / 3.0).first_failure;
  return {wrong == 0 && at3 == "cubic/R2" && at103 == "quintic/R1",
          std::to_string(wrong) + " misclassified; p=3 fails " + at3 + ", p=10/3 fails " + at103};
}

ComplexTuple localized_data(const Grid& g, double target) {
  const double c = 0.5 * g.box_length(), w = 0.4;
  auto gauss = [&](double kx) {
    return ComplexField::generate(g, [&](const auto& x) {
      const double r2 = (x[0] - c) * (x[0] - c) + (x[1] - c) * (x[1] - c);
      return std::exp(-r2 / (2 * w * w)) * std::exp(Complex(0.0, kx * x[1]));
    });
  };
  ComplexTuple v{gauss(0.0), kI * gauss(1.0)};
  return scaled(target / morrey22(v, make_lattice(g)), v);
}

Outcome picard_contraction() {
  const Grid g = make_grid(2, 32, 2 * kPi);
  CglConfig c;
  c.picard_tol = 1e-15;
  const auto v0 = localized_data(g, 1e-3);
  const auto r = picard_iterate(v0, c);
  const auto inc = r.increments();
  double worst_ratio = 0.0;
  for (std::size_t j = 1; j < inc.size(); ++j) worst_ratio = std::max(worst_ratio, inc[j] / inc[j - 1]);
  const double res = fixed_point_residual(v0, c, r);
  const bool contracts = r.converged && inc.size() >= 2 && worst_ratio < 0.5 && res <= 10 * c.picard_tol;

  auto big = c;
  big.log_xpt = false;
  big.picard_tol = 1e-10;
  std::string control;
  bool raised = false;
  try {
    const auto rb = picard_iterate(scaled(1e3, v0), big);
    control = "1e3-scaled data converged in " + std::to_string(rb.iterations) + " iterations (no NonContraction)";
  } catch (const NonContraction&) {
    raised = true;
    control = "1e3-scaled data raised NonContraction";
  }
  return {contracts && raised, std::to_string(inc.size()) + " iterations, max ratio " + num(worst_ratio) + ", residual " +
                                   num(res) + "; " + control};
}

Outcome energy_law() {
  const Grid g = make_grid(1, 64, 2 * kPi);
  LlgConfig c;
  c.T = 1.0;
  c.dt = 0.25 * stability_cap(g, 1.0);
  c.record_morrey = false;
  c.output_every = 64;
  const auto m0 = equatorial_wave(g, 0.1, 1);
  const double e0 = dirichlet_energy(m0);
  const auto res = solve_llg(m0, c);
  const auto ec = check_energy_inequality(res.ledger, 1.0);
  const double e_err = std::abs(e0 - 0.005 * kPi);
  return {ec.equality_defect <= 1e-4 * e0 && e_err <= 1e-6,
          "defect " + num(ec.equality_defect) + " vs " + num(1e-4 * e0) + ", |E(0) - 0.005 pi| " + num(e_err)};
}

Outcome cross_solver() {
  const auto m0 = equatorial_wave(make_grid(1, 64, 2 * kPi), 1e-2, 1);
  CrossValidationConfig cv;
  const auto a = cross_validate(m0, cv);
  const auto b = cross_validate(m0, cv.refined());
  const double ratio = a.sup_discrepancy / b.sup_discrepancy;
  return {a.sup_discrepancy <= 1e-3 && ratio >= 2.0,
          "sup discrepancy " + num(a.sup_discrepancy) + ", refined " + num(b.sup_discrepancy) + ", ratio " + num(ratio)};
}

Outcome stability_scaling() {
  const Grid g = make_grid(2, 32, 2 * kPi);
  CglConfig c;
  c.picard_tol = 1e-14;
  const auto v0 = localized_data(g, 1e-2);
  const ComplexTuple dir{ComplexField::generate(g, [](const auto& x) { return std::exp(Complex(0.0, 2.0 * x[0])); }),
                         ComplexField(g)};
  const auto rec = stability_experiment(v0, dir, 1e-3, 2, c);
  std::string series;
  for (double r : rec.ratios) series += (series.empty() ? "" : " ") + num(r);
  return {rec.ratios.size() == 3 && rec.spread <= 0.25, "ratios " + series + ", spread " + num(rec.spread)};
}

Outcome mollification() {
  const Grid g = make_grid(2, 64, 2 * kPi);
  double worst = 0.0, lo = 1.0, hi = 0.0;
  bool pass = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto st = mollification_study(rough_raw(g, 0.2, {0, 0, 1}, seed), {2, 4, 8});
    pass = pass && st.pass;
    for (const auto& r : st.rows) {
      worst = std::max(worst, r.ratio);
      lo = std::min(lo, r.min_norm);
      hi = std::max(hi, r.max_norm);
    }
  }
  return {pass, "max ratio " + num(worst) + ", |m~| in [" + num(lo) + ", " + num(hi) + "]"};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism(const std::string& cli, const fs::path& config) {
  const auto base = fs::temp_directory_path() / "llglab_acceptance";
  fs::remove_all(base);
  const auto a = base / "a", b = base / "b";
  const int sa = std::system((cli + " run --config " + config.string() + " --out " + a.string() + " >/dev/null").c_str());
  const int sb = std::system((cli + " run --config " + config.string() + " --out " + b.string() + " >/dev/null").c_str());
  int files = 0, differ = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file() || e.path().extension() != ".csv") continue;
    ++files;
    if (read_file(e.path()) != read_file(b / fs::relative(e.path(), a))) ++differ;
  }
  const bool ok = WEXITSTATUS(sa) == 0 && WEXITSTATUS(sb) == 0 && files > 0 && differ == 0;
  return {ok, "exit " + std::to_string(WEXITSTATUS(sa)) + "/" + std::to_string(WEXITSTATUS(sb)) + ", " +
                  std::to_string(files) + " CSVs, " + std::to_string(differ) + " differ"};
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> known;
  std::string cli = LLGLAB_CLI_PATH;
  fs::path config = LLGLAB_SOURCE_DIR "/configs/smoke.cfg";
  app.add_option("--known-failure", known, "criteria whose failure is documented; exit 0 iff exactly these fail");
  app.add_option("--cli", cli, "llglab executable");
  app.add_option("--config", config, "config for the determinism check");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"spectral exactness", spectral_exactness},
      {"Morrey oracle equivalence", morrey_oracle},
      {"semigroup decay suite", decay_lemmas},
      {"identity suite", identities},
      {"exponent windows", exponent_windows},
      {"Picard contraction", picard_contraction},
      {"energy law", energy_law},
      {"cross-solver agreement", cross_solver},
      {"stability scaling", stability_scaling},
      {"mollify and project", mollification},
      {"determinism", [&] { return determinism(cli, config); }},
  };
  std::set<int> failed;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) failed.insert(static_cast<int>(i + 1));
    std::printf("%s %2zu %-26s %7.2f s  %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), s, o.detail.c_str());
    std::fflush(stdout);
  }
  const std::set<int> expected(known.begin(), known.end());
  if (!expected.empty()) {
    std::printf("documented failures:");
    for (int k : expected) std::printf(" %d", k);
    std::printf("; observed:");
    for (int k : failed) std::printf(" %d", k);
    std::printf("\n");
  }
  return failed == expected ? 0 : 1;
}
