#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "experiments.hpp"
#include "snapshot.hpp"

namespace llglab {

// ---------------------------------------------------------------------------
// Configuration.

struct GridSpec {
  int dim = 1;
  int points = 64;
  double length = 2.0 * std::numbers::pi;
};

struct UniquenessSettings {
  double T = 0.1;
  double dt_fraction = 0.5;
  RkScheme scheme_a = RkScheme::rk2;
  RkScheme scheme_b = RkScheme::rk2;
  int refinement = 2;
  double smallness = 0.05;
  double tolerance = 1e-12;
};

struct CrossValidationSettings {
  double llg_dt_fraction = 0.25;
  double tolerance = 1e-3;
  bool refine = true;
  double min_ratio = 2.0;
};

struct MollificationSettings {
  std::vector<double> ks{2.0, 4.0, 8.0};
  double bound = 8.0;
};

struct StabilitySettings {
  double delta0 = 1e-3;
  int halvings = 2;
  double max_spread = 0.25;
};

struct LabConfig {
  std::uint64_t seed = 1;
  std::filesystem::path output = "llglab_out";
  GridSpec grid;
  InitialDataSpec initial;
  std::optional<std::filesystem::path> initial_snapshot;
  LlgConfig llg;
  /// Direct step as a fraction of the stability cap, used when no explicit dt is given.
  std::optional<double> llg_dt_fraction;
  CglConfig cgl;
  UniquenessSettings uniqueness;
  CrossValidationSettings cross_validation;
  MollificationSettings mollification;
  StabilitySettings stability;
  /// The semigroup suite runs on its own grid, independent of the spin data.
  GridSpec semigroup_grid{2, 64, 2.0 * std::numbers::pi};
  double semigroup_c_max = 50.0;
  std::vector<std::string> experiments;
};

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"energy",       "decay",           "uniqueness",       "cross_validation",
                                              "mollification", "semigroup_decay", "exponent_windows", "picard",
                                              "stability"};
  return names;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

/// Line of `key` inside `[section]`, or 0 when not found.
inline int locate(const std::string& text, const std::string& section, const std::string& key) {
  std::istringstream in(text);
  std::string line, current;
  for (int n = 1; std::getline(in, line); ++n) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == ';' || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      current = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (current == section && trim(t.substr(0, eq)) == key) return n;
  }
  return 0;
}

class IniReader {
public:
  IniReader(std::string text, std::string source) : text_(std::move(text)), source_(std::move(source)) {
    std::istringstream in(text_);
    try {
      boost::property_tree::ini_parser::read_ini(in, tree_);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError(source_ + ":" + std::to_string(e.line()), e.message());
    }
  }

  std::string where(const std::string& section, const std::string& key) const {
    const int line = locate(text_, section, key);
    return source_ + (line ? ":" + std::to_string(line) : "") + " [" + section + "] " + key;
  }

  void check_keys(const std::map<std::string, std::set<std::string>>& schema) const {
    for (const auto& [section, body] : tree_) {
      if (body.empty() && !body.data().empty()) throw ConfigError(where("", section), "key outside any section");
      const auto it = schema.find(section);
      if (it == schema.end()) throw ConfigError(source_ + " [" + section + "]", "unknown section");
      for (const auto& [key, value] : body)
        if (!it->second.count(key)) throw ConfigError(where(section, key), "unknown key");
    }
  }

  std::optional<std::string> raw(const std::string& section, const std::string& key) const {
    const auto sec = tree_.get_child_optional(boost::property_tree::ptree::path_type(section, '\0'));
    if (!sec) return std::nullopt;
    const auto v = sec->get_optional<std::string>(boost::property_tree::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return trim(*v);
  }

  /// Real number; a trailing "pi" multiplies by pi ("2pi", "pi", "0.5pi").
  void real(const std::string& s, const std::string& k, double& out) const {
    if (auto v = raw(s, k)) out = parse_real(*v, s, k);
  }
  void real(const std::string& s, const std::string& k, std::optional<double>& out) const {
    if (auto v = raw(s, k)) out = parse_real(*v, s, k);
  }
  template <class Int>
  void integer(const std::string& s, const std::string& k, Int& out) const {
    if (auto v = raw(s, k)) {
      Int x{};
      const auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), x);
      if (ec != std::errc() || p != v->data() + v->size())
        throw ConfigError(where(s, k), "expected an integer, got '" + *v + "'");
      out = x;
    }
  }
  void boolean(const std::string& s, const std::string& k, bool& out) const {
    if (auto v = raw(s, k)) {
      if (*v == "true" || *v == "1" || *v == "yes") out = true;
      else if (*v == "false" || *v == "0" || *v == "no") out = false;
      else throw ConfigError(where(s, k), "expected true or false, got '" + *v + "'");
    }
  }
  std::vector<double> reals(const std::string& s, const std::string& k) const {
    std::vector<double> out;
    if (auto v = raw(s, k))
      for (const auto& item : split_list(*v)) out.push_back(parse_real(item, s, k));
    return out;
  }
  /// Applies `parse` to the value, rethrowing its errors with key context.
  template <class T, class Fn>
  void parsed(const std::string& s, const std::string& k, T& out, Fn parse) const {
    if (auto v = raw(s, k)) {
      try {
        out = parse(*v);
      } catch (const Error& e) {
        throw ConfigError(where(s, k), e.what());
      }
    }
  }

private:
  double parse_real(const std::string& v, const std::string& s, const std::string& k) const {
    std::string body = v;
    double factor = 1.0;
    if (body.size() >= 2 && body.compare(body.size() - 2, 2, "pi") == 0) {
      body = trim(body.substr(0, body.size() - 2));
      factor = std::numbers::pi;
      if (body.empty()) return factor;
    }
    double x = 0.0;
    const auto [p, ec] = std::from_chars(body.data(), body.data() + body.size(), x);
    if (ec != std::errc() || p != body.data() + body.size() || !std::isfinite(x))
      throw ConfigError(where(s, k), "expected a number, got '" + v + "'");
    return factor * x;
  }

  std::string text_;
  std::string source_;
  boost::property_tree::ptree tree_;
};

} // namespace detail

inline const std::map<std::string, std::set<std::string>>& config_schema() {
  static const std::map<std::string, std::set<std::string>> schema{
      {"lab", {"seed", "output"}},
      {"grid", {"dim", "points", "length"}},
      {"initial", {"kind", "amplitude", "wavenumber", "width", "mollification_k", "m_infinity", "snapshot"}},
      {"llg", {"lambda", "T", "dt", "dt_fraction", "scheme", "renormalize_every", "output_every", "c_stab"}},
      {"cgl",
       {"lambda", "p", "T", "time_steps", "picard_tol", "picard_max_iter", "duhamel_substeps", "epsilon0"}},
      {"uniqueness", {"T", "dt_fraction", "scheme_a", "scheme_b", "refinement", "smallness", "tolerance"}},
      {"cross_validation", {"llg_dt_fraction", "tolerance", "refine", "min_ratio"}},
      {"mollification", {"ks", "bound"}},
      {"stability", {"delta0", "halvings", "max_spread"}},
      {"semigroup_decay", {"c_max", "dim", "points", "length"}},
      {"experiments", {"run"}},
  };
  return schema;
}

/// Parses INI text. Throws ConfigError with file:line [section] key context.
inline LabConfig parse_config(const std::string& text, const std::string& source = "<config>") {
  const detail::IniReader r(text, source);
  r.check_keys(config_schema());
  LabConfig c;
  r.integer("lab", "seed", c.seed);
  if (auto v = r.raw("lab", "output")) c.output = *v;

  r.integer("grid", "dim", c.grid.dim);
  r.integer("grid", "points", c.grid.points);
  r.real("grid", "length", c.grid.length);

  r.parsed("initial", "kind", c.initial.kind, parse_initial_kind);
  r.real("initial", "amplitude", c.initial.amplitude);
  r.integer("initial", "wavenumber", c.initial.wavenumber);
  r.real("initial", "width", c.initial.width);
  r.real("initial", "mollification_k", c.initial.mollification_k);
  if (r.raw("initial", "m_infinity")) {
    const auto v = r.reals("initial", "m_infinity");
    if (v.size() != 3) throw ConfigError(r.where("initial", "m_infinity"), "expected three comma-separated numbers");
    c.initial.m_infinity = {v[0], v[1], v[2]};
  }
  if (auto v = r.raw("initial", "snapshot")) c.initial_snapshot = *v;

  r.real("llg", "lambda", c.llg.lambda);
  r.real("llg", "T", c.llg.T);
  r.real("llg", "dt", c.llg.dt);
  r.real("llg", "dt_fraction", c.llg_dt_fraction);
  if (r.raw("llg", "dt") && c.llg_dt_fraction) throw ConfigError(r.where("llg", "dt_fraction"), "give either dt or dt_fraction");
  r.parsed("llg", "scheme", c.llg.scheme, parse_scheme);
  r.integer("llg", "renormalize_every", c.llg.renormalize_every);
  r.integer("llg", "output_every", c.llg.output_every);
  r.real("llg", "c_stab", c.llg.c_stab);
  c.llg.record_morrey = false;

  r.real("cgl", "lambda", c.cgl.lambda);
  r.real("cgl", "p", c.cgl.p);
  r.real("cgl", "T", c.cgl.T);
  r.integer("cgl", "time_steps", c.cgl.time_steps);
  r.real("cgl", "picard_tol", c.cgl.picard_tol);
  r.integer("cgl", "picard_max_iter", c.cgl.picard_max_iter);
  r.integer("cgl", "duhamel_substeps", c.cgl.duhamel_substeps);
  r.real("cgl", "epsilon0", c.cgl.epsilon0);

  r.real("uniqueness", "T", c.uniqueness.T);
  r.real("uniqueness", "dt_fraction", c.uniqueness.dt_fraction);
  r.parsed("uniqueness", "scheme_a", c.uniqueness.scheme_a, parse_scheme);
  r.parsed("uniqueness", "scheme_b", c.uniqueness.scheme_b, parse_scheme);
  r.integer("uniqueness", "refinement", c.uniqueness.refinement);
  r.real("uniqueness", "smallness", c.uniqueness.smallness);
  r.real("uniqueness", "tolerance", c.uniqueness.tolerance);

  r.real("cross_validation", "llg_dt_fraction", c.cross_validation.llg_dt_fraction);
  r.real("cross_validation", "tolerance", c.cross_validation.tolerance);
  r.boolean("cross_validation", "refine", c.cross_validation.refine);
  r.real("cross_validation", "min_ratio", c.cross_validation.min_ratio);

  if (r.raw("mollification", "ks")) c.mollification.ks = r.reals("mollification", "ks");
  r.real("mollification", "bound", c.mollification.bound);

  r.real("stability", "delta0", c.stability.delta0);
  r.integer("stability", "halvings", c.stability.halvings);
  r.real("stability", "max_spread", c.stability.max_spread);

  r.real("semigroup_decay", "c_max", c.semigroup_c_max);
  r.integer("semigroup_decay", "dim", c.semigroup_grid.dim);
  r.integer("semigroup_decay", "points", c.semigroup_grid.points);
  r.real("semigroup_decay", "length", c.semigroup_grid.length);

  if (auto v = r.raw("experiments", "run")) {
    std::set<std::string> seen;
    for (const auto& name : detail::split_list(*v)) {
      if (std::find(experiment_names().begin(), experiment_names().end(), name) == experiment_names().end())
        throw ConfigError(r.where("experiments", "run"), "unknown experiment '" + name + "'");
      if (!seen.insert(name).second) throw ConfigError(r.where("experiments", "run"), "experiment '" + name + "' listed twice");
      c.experiments.push_back(name);
    }
  }
  return c;
}

inline LabConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), "cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  LabConfig c = parse_config(ss.str(), path.string());
  if (c.initial_snapshot && c.initial_snapshot->is_relative()) c.initial_snapshot = path.parent_path() / *c.initial_snapshot;
  return c;
}

/// LLGLAB_SEED, when set, replaces the configured seed.
inline void apply_environment(LabConfig& c) {
  if (const char* s = std::getenv("LLGLAB_SEED")) {
    const std::string v = s;
    std::uint64_t x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("LLGLAB_SEED", "expected an integer, got '" + v + "'");
    c.seed = x;
  }
}

// ---------------------------------------------------------------------------
// Validated run context.

struct LabContext {
  LabConfig config;
  Grid grid;
  SpinField m0;
};

inline bool uses(const LabConfig& c, std::initializer_list<const char*> names) {
  for (const char* n : names)
    if (std::find(c.experiments.begin(), c.experiments.end(), n) != c.experiments.end()) return true;
  return false;
}

/// Resolves derived settings, checks every block the requested experiments use and builds m0.
/// Nothing is written; every failure is a ConfigError.
inline LabContext prepare(LabConfig c) {
  auto guard = [](const std::string& where, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(where, e.what());
    }
  };
  c.initial.seed = c.seed;
  std::optional<Grid> grid;
  guard("[grid]", [&] { grid = make_grid(c.grid.dim, c.grid.points, c.grid.length); });
  const Grid& g = *grid;

  const bool need_llg = uses(c, {"energy", "decay"});
  if (!c.llg_dt_fraction && c.llg.dt == 0.0) c.llg_dt_fraction = 0.25;
  if (c.llg_dt_fraction) c.llg.dt = *c.llg_dt_fraction * stability_cap(g, c.llg.lambda, c.llg.c_stab);
  if (need_llg) guard("[llg]", [&] { validate(c.llg, g); });
  if (uses(c, {"picard", "stability", "cross_validation", "exponent_windows"})) guard("[cgl]", [&] { validate(c.cgl); });
  if (uses(c, {"uniqueness"})) {
    const auto& u = c.uniqueness;
    if (!(u.T > 0.0)) throw ConfigError("[uniqueness] T", "must be positive");
    if (!(u.dt_fraction > 0.0 && u.dt_fraction <= 1.0)) throw ConfigError("[uniqueness] dt_fraction", "must lie in (0, 1]");
    if (u.refinement < 2) throw ConfigError("[uniqueness] refinement", "must be >= 2");
    if (!(u.tolerance >= 0.0)) throw ConfigError("[uniqueness] tolerance", "must be nonnegative");
  }
  if (uses(c, {"cross_validation"})) {
    const auto& x = c.cross_validation;
    if (!(x.llg_dt_fraction > 0.0 && x.llg_dt_fraction <= 1.0))
      throw ConfigError("[cross_validation] llg_dt_fraction", "must lie in (0, 1]");
    if (!(x.tolerance > 0.0)) throw ConfigError("[cross_validation] tolerance", "must be positive");
  }
  if (uses(c, {"mollification"})) {
    if (c.mollification.ks.empty()) throw ConfigError("[mollification] ks", "must list at least one scale");
    for (double k : c.mollification.ks)
      if (!(k > 0.0)) throw ConfigError("[mollification] ks", "scales must be positive");
  }
  if (uses(c, {"stability"})) {
    if (!(c.stability.delta0 > 0.0)) throw ConfigError("[stability] delta0", "must be positive");
    if (c.stability.halvings < 1) throw ConfigError("[stability] halvings", "must be >= 1");
  }
  if (uses(c, {"semigroup_decay"})) {
    if (!(c.semigroup_c_max > 0.0)) throw ConfigError("[semigroup_decay] c_max", "must be positive");
    guard("[semigroup_decay]", [&] { make_grid(c.semigroup_grid.dim, c.semigroup_grid.points, c.semigroup_grid.length); });
  }

  std::optional<SpinField> m0;
  guard("[initial]", [&] {
    if (c.initial_snapshot) {
      m0 = spin_from_snapshot(read_snapshot(*c.initial_snapshot));
      if (!(m0->grid() == g)) throw InvalidArgument("snapshot grid differs from [grid]");
    } else {
      m0 = generate_initial_data(c.initial, g);
    }
  });
  return LabContext{std::move(c), g, std::move(*m0)};
}

// ---------------------------------------------------------------------------
// Experiments.

struct CheckResult {
  std::string experiment;
  std::string check;
  std::string status;  // PASS, FAIL or INCONCLUSIVE
  double value = std::numeric_limits<double>::quiet_NaN();
  double threshold = std::numeric_limits<double>::quiet_NaN();
  std::string detail;

  bool passed() const { return status == "PASS"; }
};

inline std::string pass_fail(bool ok) { return ok ? "PASS" : "FAIL"; }

/// value <= threshold.
inline CheckResult at_most(const std::string& exp, const std::string& check, double value, double threshold,
                           std::string detail = "") {
  return {exp, check, pass_fail(value <= threshold), value, threshold, std::move(detail)};
}
/// value >= threshold.
inline CheckResult at_least(const std::string& exp, const std::string& check, double value, double threshold,
                            std::string detail = "") {
  return {exp, check, pass_fail(value >= threshold), value, threshold, std::move(detail)};
}

using ExperimentFn = std::function<std::vector<CheckResult>(const LabContext&, const std::filesystem::path&)>;

namespace experiments {

/// ||grad m(t) - grad m0||_{L^2} over the ball of radius L/4 about the box centre.
inline double local_gradient_change(const SpinField& m, const SpinField& m0) {
  const Grid& g = m.grid();
  const double c = 0.5 * g.box_length(), r = 0.25 * g.box_length();
  double s = 0.0;
  for (int k = 0; k < g.dim(); ++k) {
    const auto a = derivative(m.field(), k, 1);
    const auto b = derivative(m0.field(), k, 1);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto x = g.position(i);
      double r2 = 0.0;
      for (int d = 0; d < g.dim(); ++d) r2 += (x[static_cast<std::size_t>(d)] - c) * (x[static_cast<std::size_t>(d)] - c);
      if (r2 > r * r) continue;
      const Vec3 diff = a[i] - b[i];
      s += dot(diff, diff);
    }
  }
  return std::sqrt(s * g.cell_volume());
}

inline std::vector<CheckResult> energy(const LabContext& ctx, const std::filesystem::path& dir) {
  const auto& c = ctx.config;
  const auto res = solve_llg(ctx.m0, c.llg);
  res.ledger.table().write(dir / "ledger.csv");
  CsvTable h1("t,grad_change_l2_ball");
  for (std::size_t k = 0; k < res.trajectory.size(); ++k)
    h1.row({res.trajectory.times[k], local_gradient_change(res.trajectory.states[k], ctx.m0)});
  h1.write(dir / "h1_approach.csv");
  write_spin_snapshot(dir / "m_final.snap", res.trajectory.back());
  const auto ec = check_energy_inequality(res.ledger, c.llg.lambda);
  return {at_most("energy", "energy_inequality", ec.violation, ec.tolerance, "max of E(t) + damping * dissipation - E(0)"),
          at_most("energy", "energy_equality", ec.equality_defect, ec.tolerance, "max |E(t) + damping * dissipation - E(0)|"),
          {"energy", "energy_monotone", pass_fail(ec.monotone), ec.monotone ? 1.0 : 0.0, 1.0, "E nonincreasing up to tolerance"}};
}

inline std::vector<CheckResult> decay(const LabContext& ctx, const std::filesystem::path& dir) {
  const auto res = solve_llg(ctx.m0, ctx.config.llg);
  const auto d = decay_report(res.trajectory);
  d.table().write(dir / "decay.csv");
  auto second_half = [&](const std::vector<double>& v, bool late) {
    const auto& t = d.series.times;
    const double start = 0.1 * t.back(), mid = 0.5 * (start + t.back());
    double m = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k)
      if (t[k] > start && (late ? t[k] > mid : t[k] <= mid)) m = std::max(m, v[k]);
    return m;
  };
  return {at_most("decay", "first_derivative_bounded", second_half(d.series.first, true),
                  2.0 * second_half(d.series.first, false), "late-half max vs twice early-half max after 10% of the window"),
          at_most("decay", "second_derivative_bounded", second_half(d.series.second, true),
                  2.0 * second_half(d.series.second, false), "late-half max vs twice early-half max after 10% of the window")};
}

inline std::vector<CheckResult> uniqueness(const LabContext& ctx, const std::filesystem::path& dir) {
  const auto& s = ctx.config.uniqueness;
  UniquenessConfig uc;
  uc.lambda = ctx.config.llg.lambda;
  uc.T = s.T;
  uc.dt_fraction = s.dt_fraction;
  uc.scheme_a = s.scheme_a;
  uc.scheme_b = s.scheme_b;
  uc.refinement = s.refinement;
  uc.smallness = s.smallness;
  uc.tolerance = s.tolerance;
  const auto rec = uniqueness_experiment(ctx.m0, uc);
  rec.table().write(dir / "uniqueness.csv");
  std::string detail = "numerical consistency proxy (two discretizations); transient " + std::to_string(rec.transient) +
                       " steps; observed order " + format_number(rec.order_estimate);
  if (!rec.small) detail += "; data above smallness " + format_number(s.smallness);
  return {{"uniqueness", "compensated_difference_nonincreasing", rec.status, rec.max_increase, s.tolerance, detail}};
}

inline std::vector<CheckResult> cross_validation(const LabContext& ctx, const std::filesystem::path& dir) {
  const auto& c = ctx.config;
  CrossValidationConfig cv;
  cv.lambda = c.llg.lambda;
  cv.T = c.cgl.T;
  cv.time_steps = c.cgl.time_steps;
  cv.llg_dt_fraction = c.cross_validation.llg_dt_fraction;
  cv.scheme = c.llg.scheme;
  cv.duhamel_substeps = c.cgl.duhamel_substeps;
  cv.picard_tol = c.cgl.picard_tol;
  cv.picard_max_iter = c.cgl.picard_max_iter;
  cv.p = c.cgl.p;
  const auto rep = cross_validate(ctx.m0, cv);
  rep.table().write(dir / "discrepancy.csv");
  std::vector<CheckResult> out{at_most("cross_validation", "sup_relative_discrepancy", rep.sup_discrepancy,
                                       c.cross_validation.tolerance, "|grad m| direct vs mild, relative L2")};
  if (c.cross_validation.refine) {
    const auto fine = cross_validate(ctx.m0, cv.refined());
    fine.table().write(dir / "discrepancy_refined.csv");
    const double ratio = fine.sup_discrepancy > 0.0 ? rep.sup_discrepancy / fine.sup_discrepancy
                                                    : (rep.sup_discrepancy > 0.0 ? INFINITY : 0.0);
    // Exactly equal solvers (e.g. constant data) have nothing to refine.
    if (rep.sup_discrepancy == 0.0)
      out.push_back({"cross_validation", "refinement_ratio", "PASS", ratio, c.cross_validation.min_ratio, "zero discrepancy"});
    else
      out.push_back(at_least("cross_validation", "refinement_ratio", ratio, c.cross_validation.min_ratio,
                             "sup discrepancy ratio under halved dt and doubled substeps"));
  }
  return out;
}

inline std::vector<CheckResult> mollification(const LabContext& ctx, const std::filesystem::path& dir) {
  const auto& c = ctx.config;
  const auto raw = rough_raw(ctx.grid, c.initial.amplitude, c.initial.m_infinity, c.seed);
  const auto st = mollification_study(raw, c.mollification.ks, c.mollification.bound);
  st.table().write(dir / "mollification.csv");
  std::vector<CheckResult> out;
  for (const auto& r : st.rows) {
    const std::string k = format_number(r.k);
    out.push_back(at_most("mollification", "norm_ratio_k" + k, r.ratio, c.mollification.bound,
                          "mollified over raw ||grad||_M22"));
    out.push_back(at_least("mollification", "min_length_k" + k, r.min_norm, 0.75, "pre-projection min |m|"));
    out.push_back(at_most("mollification", "max_length_k" + k, r.max_norm, 1.0 + 1e-12, "pre-projection max |m|"));
  }
  return out;
}

inline std::vector<CheckResult> semigroup_decay(const LabContext& ctx, const std::filesystem::path& dir) {
  const auto& sg = ctx.config.semigroup_grid;
  const auto s = decay_suite(make_grid(sg.dim, sg.points, sg.length), ctx.config.cgl.lambda, ctx.config.semigroup_c_max);
  s.table().write(dir / "decay_cases.csv");
  s.series_table().write(dir / "decay_series.csv");
  double worst = 0.0;
  bool nonincreasing = true;
  for (const auto& r : s.rows) {
    worst = std::max(worst, r.report.max_ratio);
    nonincreasing = nonincreasing && r.report.final_decade_nonincreasing;
  }
  return {at_most("semigroup_decay", "compensated_ratio_bounded", worst, ctx.config.semigroup_c_max),
          {"semigroup_decay", "final_decade_nonincreasing", pass_fail(nonincreasing), nonincreasing ? 1.0 : 0.0, 1.0, ""}};
}

inline std::vector<CheckResult> exponent_windows(const LabContext& ctx, const std::filesystem::path& dir) {
  const auto rep = exponent_window_check(ctx.config.cgl.p);
  CsvTable t("label,d1,d2,valid,beta");
  for (const auto& pr : rep.pairs)
    t.raw_row(csv_line({pr.label, format_number(pr.d1), format_number(pr.d2), pr.valid ? "1" : "0", format_number(pr.beta)}));
  t.write(dir / "windows.csv");
  return {{"exponent_windows", "all_pairs_valid", pass_fail(rep.valid), rep.valid ? 1.0 : 0.0, 1.0,
           rep.valid ? "" : "first failure " + rep.first_failure}};
}

inline std::vector<CheckResult> picard(const LabContext& ctx, const std::filesystem::path& dir) {
  const auto& c = ctx.config;
  const auto v0 = coulomb_u(ctx.m0, c.cgl.lambda);
  const auto r = picard_iterate(v0, c.cgl);
  r.log_table().write(dir / "picard_log.csv");
  write_tuple_snapshot(dir / "u_final.snap", r.trajectory.back());
  std::string warn;
  for (const auto& w : r.warnings) warn += (warn.empty() ? "" : "; ") + w;
  return {{"picard", "converged", pass_fail(r.converged), static_cast<double>(r.iterations),
           static_cast<double>(c.cgl.picard_max_iter), warn},
          at_most("picard", "fixed_point_residual", fixed_point_residual(v0, c.cgl, r), 10.0 * c.cgl.picard_tol),
          at_most("picard", "div_a_residual", r.div_a_residual, 1e-10)};
}

inline std::vector<CheckResult> stability(const LabContext& ctx, const std::filesystem::path& dir) {
  const auto& c = ctx.config;
  const auto v0 = coulomb_u(ctx.m0, c.cgl.lambda);
  ComplexTuple dir_field = zero_tuple(ctx.grid, ctx.grid.dim());
  const double w = 2.0 * std::numbers::pi / ctx.grid.box_length();
  dir_field[0] = ComplexField::generate(ctx.grid, [&](const auto& x) { return std::exp(Complex(0.0, w * x[0])); });
  const auto rec = stability_experiment(v0, dir_field, c.stability.delta0, c.stability.halvings, c.cgl);
  CsvTable t("delta,ratio");
  for (std::size_t k = 0; k < rec.deltas.size(); ++k) t.row({rec.deltas[k], rec.ratios[k]});
  t.write(dir / "stability.csv");
  return {at_most("stability", "ratio_spread", rec.spread, c.stability.max_spread, "(max - min) / min of the ratio series")};
}

} // namespace experiments

inline ExperimentFn experiment_function(const std::string& name) {
  static const std::map<std::string, ExperimentFn> table{
      {"energy", experiments::energy},
      {"decay", experiments::decay},
      {"uniqueness", experiments::uniqueness},
      {"cross_validation", experiments::cross_validation},
      {"mollification", experiments::mollification},
      {"semigroup_decay", experiments::semigroup_decay},
      {"exponent_windows", experiments::exponent_windows},
      {"picard", experiments::picard},
      {"stability", experiments::stability},
  };
  return table.at(name);
}

/// Runs one experiment into its own directory; solver errors become a failed "run" check.
inline std::vector<CheckResult> run_one(const LabContext& ctx, const std::string& name) {
  const auto dir = ctx.config.output / name;
  std::filesystem::create_directories(dir);
  try {
    return experiment_function(name)(ctx, dir);
  } catch (const Error& e) {
    return {{name, "run", "FAIL", std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(), e.what()}};
  }
}

inline std::string sanitize_cell(std::string s) {
  for (auto& ch : s)
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
  return s;
}

struct LabReport {
  std::vector<CheckResult> checks;
  bool all_pass = true;

  CsvTable summary() const {
    CsvTable t("experiment,check,status,value,threshold,detail");
    for (const auto& c : checks)
      t.raw_row(csv_line({c.experiment, c.check, c.status, format_number(c.value), format_number(c.threshold),
                          sanitize_cell(c.detail)}));
    return t;
  }
};

/// Executes the declared experiments (concurrently when jobs > 1) and writes summary.csv.
inline LabReport run_lab(const LabContext& ctx, int jobs = 1) {
  const auto& names = ctx.config.experiments;
  std::filesystem::create_directories(ctx.config.output);
  std::vector<std::vector<CheckResult>> results(names.size());
  if (jobs <= 1) {
    for (std::size_t i = 0; i < names.size(); ++i) results[i] = run_one(ctx, names[i]);
  } else {
    for (std::size_t start = 0; start < names.size(); start += static_cast<std::size_t>(jobs)) {
      std::vector<std::future<std::vector<CheckResult>>> batch;
      const std::size_t end = std::min(names.size(), start + static_cast<std::size_t>(jobs));
      for (std::size_t i = start; i < end; ++i) batch.push_back(std::async(std::launch::async, run_one, std::cref(ctx), names[i]));
      for (std::size_t i = start; i < end; ++i) results[i] = batch[i - start].get();
    }
  }
  LabReport rep;
  for (auto& r : results)
    for (auto& c : r) {
      rep.all_pass = rep.all_pass && c.passed();
      rep.checks.push_back(std::move(c));
    }
  rep.summary().write(ctx.config.output / "summary.csv");
  return rep;
}

} // namespace llglab
