#include "atv/run.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

#include "atv/energy.hpp"
#include "atv/errors.hpp"
#include "atv/geometry.hpp"
#include "atv/io.hpp"
#include "atv/nested_ball_field.hpp"
#include "atv/pairing.hpp"
#include "atv/report.hpp"
#include "atv/solver.hpp"

namespace atv {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// splitmix64: deterministic, seedable, good enough for perturbation trials
struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed) : state(seed) {}
  double uniform() {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z ^= z >> 31;
    return double(z >> 11) / 9007199254740992.0;  // [0,1)
  }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
};

// ---------------------------------------------------------------------------
// config -> problem pieces

struct OutputSink {
  std::string dir;
  bool json = true, csv = true, fields = false, images = false;
  std::string path(const std::string& name) const { return dir + "/" + name; }
};

OutputSink parse_output(const ConfigFile& cfg) {
  OutputSink s;
  s.dir = cfg.get_string("output.directory", "out");
  s.json = cfg.get_bool("output.json", true);
  s.csv = cfg.get_bool("output.csv", true);
  s.fields = cfg.get_bool("output.fields", false);
  s.images = cfg.get_bool("output.images", false);
  std::filesystem::create_directories(s.dir);
  return s;
}

GridSpec parse_grid(const ConfigFile& cfg) {
  int dim = static_cast<int>(cfg.get_int("grid.dim", 2));
  long n = cfg.get_int("grid.n", 0);
  if (n <= 0) throw config_error("grid.n must be set to a positive cell count");
  if (dim == 2) return GridSpec::unit_square(static_cast<int>(n));
  if (dim == 3) return GridSpec::unit_cube(static_cast<int>(n));
  throw config_error("grid.dim must be 2 or 3");
}

AnisotropyModel parse_model(const ConfigFile& cfg, int dim) {
  std::string kind = cfg.get_string("problem.anisotropy", "euclidean");
  if (kind == "euclidean") return AnisotropyModel::euclidean(dim);
  if (kind == "weighted")
    return AnisotropyModel::weighted_euclidean(dim, cfg.get_double("problem.weight_base", 1.0),
                                               cfg.get_double("problem.weight_amp", 0.3));
  if (kind == "riemannian") {
    std::vector<double> def;
    for (int j = 0; j < dim; ++j)
      for (int i = 0; i < dim; ++i) def.push_back(i == j ? 1.0 : 0.0);
    std::vector<double> m = cfg.get_double_list("problem.metric", def);
    if (static_cast<int>(m.size()) != dim * dim)
      throw config_error("problem.metric needs dim*dim row-major entries");
    std::array<double, 9> a{1, 0, 0, 0, 1, 0, 0, 0, 1};
    for (int j = 0; j < dim; ++j)
      for (int i = 0; i < dim; ++i) a[static_cast<std::size_t>(3 * j + i)] = m[static_cast<std::size_t>(dim * j + i)];
    return AnisotropyModel::riemannian(dim, a, cfg.get_double("problem.metric_modulation", 0.0));
  }
  throw config_error("problem.anisotropy must be euclidean, weighted, or riemannian");
}

/// Everything a solve-flavored command needs, parsed up front so unknown-key
/// rejection happens before any heavy work.
struct SolveSetup {
  GridSpec grid;
  AnisotropyModel model = AnisotropyModel::euclidean(2);
  ProblemSpec spec{ProblemMode::Rof, AnisotropyModel::euclidean(2), GridSpec::unit_square(2)};
  SolveOptions opts;
  Vec center{0.5, 0.5, 0.0};
  double radius = 0.25;
};

Vec parse_center(const ConfigFile& cfg, int dim) {
  std::vector<double> def(static_cast<std::size_t>(dim), 0.5);
  std::vector<double> c = cfg.get_double_list("problem.disc_center", def);
  if (static_cast<int>(c.size()) != dim)
    throw config_error("problem.disc_center needs one coordinate per dimension");
  Vec out{0, 0, 0};
  for (int i = 0; i < dim; ++i) out[i] = c[static_cast<std::size_t>(i)];
  return out;
}

ScalarField parse_datum(const ConfigFile& cfg, const GridSpec& grid, Vec center,
                        double radius) {
  std::string kind = cfg.get_string("problem.datum", "disc");
  double value = cfg.get_double("problem.datum_value", 1.0);
  if (kind == "disc") {
    int nsub = grid.dim == 3 ? 4 : 8;
    return ScalarField::cell_average(
        grid,
        [&](const Vec& x) { return dist(x, center, grid.dim) <= radius ? value : 0.0; },
        nsub);
  }
  if (kind == "stripe")
    return ScalarField::sample(grid,
                               [&](const Vec& x) { return x[0] > 0.5 ? value : 0.0; });
  if (kind == "constant") return ScalarField::constant(grid, value);
  throw config_error("problem.datum must be disc, stripe, or constant");
}

SolveOptions parse_solver_options(const ConfigFile& cfg) {
  SolveOptions o;
  o.max_iters = cfg.get_int("solver.max_iters", o.max_iters);
  o.gap_tol = cfg.get_double("solver.gap_tol", o.gap_tol);
  o.check_every = static_cast<int>(cfg.get_int("solver.check_every", o.check_every));
  o.step_scale = cfg.get_double("solver.step_scale", o.step_scale);
  o.accelerate = cfg.get_bool("solver.accelerate", o.accelerate);
  o.record_history = cfg.get_bool("solver.record_history", o.record_history);
  o.presolve_iters = static_cast<int>(cfg.get_int("solver.presolve_iters", o.presolve_iters));
  o.presolve_tol = cfg.get_double("solver.presolve_tol", o.presolve_tol);
  o.presolve_target = cfg.get_double("solver.presolve_target", o.presolve_target);
  return o;
}

std::vector<std::uint8_t> frame_mask(const GridSpec& g, int margin) {
  std::vector<std::uint8_t> fixed(g.cell_count(), 0);
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    auto ijk = g.coords(c);
    for (int a = 0; a < g.dim; ++a)
      if (ijk[static_cast<std::size_t>(a)] < margin ||
          ijk[static_cast<std::size_t>(a)] >= g.n[static_cast<std::size_t>(a)] - margin)
        fixed[c] = 1;
  }
  return fixed;
}

SolveSetup parse_solve_setup(const ConfigFile& cfg) {
  SolveSetup s;
  s.grid = parse_grid(cfg);
  s.model = parse_model(cfg, s.grid.dim);
  s.center = parse_center(cfg, s.grid.dim);
  s.radius = cfg.get_double("problem.disc_radius", 0.25);
  s.opts = parse_solver_options(cfg);

  std::string mode = cfg.get_string("problem.mode", "rof");
  if (mode == "rof") {
    double lambda = cfg.get_double("problem.lambda", 32.0);
    s.spec = ProblemSpec::rof(s.model, parse_datum(cfg, s.grid, s.center, s.radius), lambda);
    return s;
  }
  if (mode == "prescribed_divergence") {
    int margin = static_cast<int>(cfg.get_int("problem.clamp_margin", 2));
    std::string source = cfg.get_string("problem.divergence_source", "analytic_pair");
    if (source == "analytic_pair") {
      // datum taken from the closed-form calibrated pair, so the problem is
      // realizable by construction and the extracted flux has a reference
      double lambda = cfg.get_double("problem.lambda", 32.0);
      BallPair pair = analytic_ball_pair(s.grid, s.center, s.radius, lambda);
      s.spec = ProblemSpec::prescribed_divergence(
          s.model, pair.g, ScalarField::zeros(s.grid), frame_mask(s.grid, margin));
      return s;
    }
    if (source == "boundary_forcing") {
      // zero datum, inner disc clamped to datum_value, frame clamped to 0:
      // the minimizer is the smallest-perimeter interface around the disc
      double value = cfg.get_double("problem.datum_value", 1.0);
      std::vector<std::uint8_t> fixed = frame_mask(s.grid, margin);
      ScalarField dir = ScalarField::zeros(s.grid);
      for (std::size_t c = 0; c < s.grid.cell_count(); ++c)
        if (dist(s.grid.cell_center(c), s.center, s.grid.dim) <= s.radius) {
          fixed[c] = 1;
          dir.v[c] = value;
        }
      s.spec = ProblemSpec::prescribed_divergence(s.model, ScalarField::zeros(s.grid),
                                                  dir, std::move(fixed));
      return s;
    }
    throw config_error("problem.divergence_source must be analytic_pair or boundary_forcing");
  }
  throw config_error("problem.mode must be rof or prescribed_divergence");
}

struct Diagnostics {
  int trace_points = 32;
  std::vector<double> blowup_radii_h{32, 16, 8, 4};
  int coarea_thresholds = 128;
  double density_rho_h = 8;
  int perturbation_trials = 20;
  double level_threshold = std::numeric_limits<double>::quiet_NaN();  // default: mid-range
  // named tolerances, echoed into every report that uses them
  double excess_tol = 1e-9;
  double divergence_tol = 1e-8;
  double pairing_tol = 0.05;
  double trace_tol = 0.05;
  double blowup_tol = 0.1;
  double subgradient_slack = 1e-8;
  double density_lo = 0.05, density_hi = 0.95;
  double coarea_tol = 0.2;
  double binary_coarea_tol = 1e-12;
};

Diagnostics parse_diagnostics(const ConfigFile& cfg) {
  Diagnostics d;
  d.trace_points = static_cast<int>(cfg.get_int("diagnostics.trace_points", d.trace_points));
  d.blowup_radii_h = cfg.get_double_list("diagnostics.blowup_radii_h", d.blowup_radii_h);
  d.coarea_thresholds =
      static_cast<int>(cfg.get_int("diagnostics.coarea_thresholds", d.coarea_thresholds));
  d.density_rho_h = cfg.get_double("diagnostics.density_rho_h", d.density_rho_h);
  d.perturbation_trials =
      static_cast<int>(cfg.get_int("diagnostics.perturbation_trials", d.perturbation_trials));
  if (cfg.has("diagnostics.level_threshold"))
    d.level_threshold = cfg.get_double("diagnostics.level_threshold", 0.0);
  d.excess_tol = cfg.get_double("diagnostics.excess_tol", d.excess_tol);
  d.divergence_tol = cfg.get_double("diagnostics.divergence_tol", d.divergence_tol);
  d.pairing_tol = cfg.get_double("diagnostics.pairing_tol", d.pairing_tol);
  d.trace_tol = cfg.get_double("diagnostics.trace_tol", d.trace_tol);
  d.blowup_tol = cfg.get_double("diagnostics.blowup_tol", d.blowup_tol);
  d.subgradient_slack = cfg.get_double("diagnostics.subgradient_slack", d.subgradient_slack);
  d.density_lo = cfg.get_double("diagnostics.density_lo", d.density_lo);
  d.density_hi = cfg.get_double("diagnostics.density_hi", d.density_hi);
  d.coarea_tol = cfg.get_double("diagnostics.coarea_tol", d.coarea_tol);
  for (std::size_t i = 0; i + 1 < d.blowup_radii_h.size(); ++i)
    if (!(d.blowup_radii_h[i + 1] < d.blowup_radii_h[i]))
      throw config_error("diagnostics.blowup_radii_h must be strictly decreasing");
  if (!d.blowup_radii_h.empty() && d.blowup_radii_h.back() < 2.0)
    throw config_error("diagnostics.blowup_radii_h entries must be >= 2 (cells)");
  return d;
}

double mid_threshold(const ScalarField& u, double configured) {
  if (std::isfinite(configured)) return configured;
  return 0.5 * (u.min() + u.max());
}

double median_of(std::vector<double> v) {
  if (v.empty()) throw empty_region_error("median of an empty sample set");
  std::sort(v.begin(), v.end());
  std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// ---------------------------------------------------------------------------
// shared artifact helpers

void dump_solution(const OutputSink& sink, const SolveResult& r) {
  if (sink.fields) {
    write_field(sink.path("u.field"), r.u);
    write_field(sink.path("z.field"), r.z);
    write_field(sink.path("g.field"), r.g);
  }
  if (sink.images && r.u.grid.dim == 2) write_pgm(sink.path("u.pgm"), r.u);
}

void record_solve(RunReport& report, const SolveResult& r, const SolveOptions& opts,
                  const OutputSink& sink) {
  auto& res = report.results();
  res["iterations"] = r.iterations;
  res["gap"] = r.gap;
  res["primal_energy"] = r.primal_energy;
  res["dual_energy"] = r.dual_energy;
  res["converged"] = r.gap <= opts.gap_tol;
  report.tolerances()["gap_tol"] = opts.gap_tol;
  report.add_check("converged", r.gap <= opts.gap_tol, r.gap, opts.gap_tol, "<=");
  report.add_check("gap_nonnegative", r.gap >= -1e-12, r.gap, -1e-12, ">=");
  if (!r.history.empty() && sink.csv) {
    std::vector<std::vector<double>> rows;
    for (const GapSample& s : r.history)
      rows.push_back({double(s.iteration), s.gap, s.primal, s.dual});
    write_csv(sink.path("history.csv"), {"iteration", "gap", "primal", "dual"}, rows);
  }
}

// ---------------------------------------------------------------------------
// commands

void cmd_solve(const ConfigFile& cfg, RunReport& report, const OutputSink& sink) {
  SolveSetup s = parse_solve_setup(cfg);
  cfg.assert_all_consumed();
  auto t0 = Clock::now();
  SolveResult r = solve(s.spec, s.opts);
  report.set_metadata("solve_seconds", seconds_since(t0));
  record_solve(report, r, s.opts, sink);
  dump_solution(sink, r);
}

void cmd_verify(const ConfigFile& cfg, RunReport& report, const OutputSink& sink) {
  SolveSetup s = parse_solve_setup(cfg);
  Diagnostics d = parse_diagnostics(cfg);
  cfg.assert_all_consumed();

  auto t0 = Clock::now();
  SolveResult r = solve(s.spec, s.opts);
  report.set_metadata("solve_seconds", seconds_since(t0));
  record_solve(report, r, s.opts, sink);
  dump_solution(sink, r);

  t0 = Clock::now();
  CalibrationReport rep = verify_subgradient(r, s.model);
  auto& res = report.results();
  res["feasibility_excess"] = rep.feasibility_excess;
  res["divergence_residual_rel"] = rep.div_residual_rel;
  res["divergence_residual_abs"] = rep.div_residual_abs;
  res["pairing_residual_rel"] = rep.pairing_residual_rel;
  res["pairing_residual_abs"] = rep.pairing_residual_abs;
  res["min_cell_defect"] = rep.min_cell_defect;
  res["tv_energy"] = rep.tv_energy_value;
  report.tolerances()["excess_tol"] = d.excess_tol;
  report.tolerances()["divergence_tol"] = d.divergence_tol;
  report.tolerances()["pairing_tol"] = d.pairing_tol;
  report.add_check("feasibility_excess", rep.feasibility_excess <= d.excess_tol,
                   rep.feasibility_excess, d.excess_tol, "<=");
  report.add_check("divergence_residual", rep.div_residual_rel <= d.divergence_tol,
                   rep.div_residual_rel, d.divergence_tol, "<=");
  report.add_check("pairing_residual", rep.pairing_residual_rel <= d.pairing_tol,
                   rep.pairing_residual_rel, d.pairing_tol, "<=");

  // normal traces and blow-up residuals along the solved interface
  const GridSpec& g = r.u.grid;
  LevelSetView E = upper_level_set(r.u, mid_threshold(r.u, d.level_threshold));
  auto pts = boundary_sample_points(E, d.trace_points);
  std::vector<double> radii;
  for (double k : d.blowup_radii_h) radii.push_back(k * g.h);
  std::vector<double> trace_err, limit_res;
  std::vector<std::vector<double>> point_rows;
  int skipped = 0;
  for (const Vec& x : pts) {
    try {
      double tr = normal_trace(r.z, E, x, 2 * g.h, 8 * g.h);
      NormalLimitCheck nl = normal_limit_check(r.z, E, s.model, x, radii);
      trace_err.push_back(std::abs(tr - 1.0));
      limit_res.push_back(nl.residual);
      point_rows.push_back({x[0], x[1], x[2], tr, nl.residual, nl.normal_quality});
    } catch (const non_reduced_point_error&) {
      ++skipped;
    }
  }
  if (trace_err.empty())
    throw empty_region_error("verify: no usable boundary points on the solved level set");
  double tr_med = median_of(trace_err);
  double bl_med = median_of(limit_res);
  res["boundary_points_used"] = static_cast<int>(trace_err.size());
  res["boundary_points_skipped"] = skipped;
  res["trace_error_median"] = tr_med;
  res["blowup_residual_median"] = bl_med;
  report.tolerances()["trace_tol"] = d.trace_tol;
  report.tolerances()["blowup_tol"] = d.blowup_tol;
  report.add_check("trace_error_median", tr_med <= d.trace_tol, tr_med, d.trace_tol, "<=");
  report.add_check("blowup_residual_median", bl_med <= d.blowup_tol, bl_med, d.blowup_tol,
                   "<=");
  if (sink.csv)
    write_csv(sink.path("boundary_points.csv"),
              {"x", "y", "z", "normal_trace", "blowup_residual", "normal_quality"},
              point_rows);

  // subgradient inequality of the returned datum against random perturbations
  Rng rng(20260816);
  const double hd = g.cell_volume();
  double ju = tv_energy(r.u, s.model);
  double min_slack = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < d.perturbation_trials; ++trial) {
    ScalarField v = r.u;
    if (trial % 2 == 0) {
      double amp = (trial % 4 == 0) ? 1.0 : 0.02;
      for (std::size_t c = 0; c < g.cell_count(); ++c) v.v[c] += amp * rng.uniform(-1.0, 1.0);
    } else {
      Vec cb{rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8),
             g.dim == 3 ? rng.uniform(0.2, 0.8) : 0.0};
      double w = rng.uniform(0.05, 0.3), sgn = rng.uniform(-0.5, 0.5);
      for (std::size_t c = 0; c < g.cell_count(); ++c) {
        Vec x = g.cell_center(c);
        double d2 = dot(sub(x, cb, g.dim), sub(x, cb, g.dim), g.dim);
        v.v[c] += sgn * std::exp(-d2 / (w * w));
      }
    }
    Accumulator lin;
    for (std::size_t c = 0; c < g.cell_count(); ++c) lin.add(r.g.v[c] * (v.v[c] - r.u.v[c]));
    min_slack = std::min(min_slack, tv_energy(v, s.model) - ju - lin.value() * hd);
  }
  res["subgradient_trials"] = d.perturbation_trials;
  res["subgradient_min_slack"] = min_slack;
  report.tolerances()["subgradient_slack"] = d.subgradient_slack;
  report.add_check("subgradient_inequality", min_slack >= -d.subgradient_slack, min_slack,
                   -d.subgradient_slack, ">=");
  report.set_metadata("diagnostic_seconds", seconds_since(t0));
}

void cmd_levelset(const ConfigFile& cfg, RunReport& report, const OutputSink& sink) {
  SolveSetup s = parse_solve_setup(cfg);
  Diagnostics d = parse_diagnostics(cfg);
  cfg.assert_all_consumed();

  auto t0 = Clock::now();
  SolveResult r = solve(s.spec, s.opts);
  report.set_metadata("solve_seconds", seconds_since(t0));
  record_solve(report, r, s.opts, sink);
  dump_solution(sink, r);

  t0 = Clock::now();
  const GridSpec& g = r.u.grid;
  LevelSetView E = upper_level_set(r.u, mid_threshold(r.u, d.level_threshold));
  auto pts = boundary_sample_points(E, d.trace_points);
  if (pts.empty())
    throw empty_region_error("levelset: the solved level set has no boundary");
  double rho = d.density_rho_h * g.h;
  double dmin = 1.0, dmax = 0.0;
  std::vector<std::vector<double>> rows;
  for (const Vec& x : pts) {
    double ratio = density_ratio(E, x, rho);
    dmin = std::min(dmin, ratio);
    dmax = std::max(dmax, ratio);
    rows.push_back({x[0], x[1], x[2], ratio});
  }
  auto& res = report.results();
  res["boundary_points"] = static_cast<int>(pts.size());
  res["density_rho"] = rho;
  res["density_min"] = dmin;
  res["density_max"] = dmax;
  res["perimeter"] = perimeter(E, s.model);
  report.tolerances()["density_band"] = {d.density_lo, d.density_hi};
  report.add_check("density_lower", dmin >= d.density_lo, dmin, d.density_lo, ">=");
  report.add_check("density_upper", dmax <= d.density_hi, dmax, d.density_hi, "<=");

  // coarea ladder on the solved field, and exactness on its binarized cut
  double defect = coarea_defect(r.u, s.model, d.coarea_thresholds);
  ScalarField indicator = ScalarField::zeros(g);
  for (std::size_t c = 0; c < g.cell_count(); ++c)
    indicator.v[c] = E.contains(c) ? 1.0 : 0.0;
  double binary_defect = coarea_defect(indicator, s.model, d.coarea_thresholds);
  res["coarea_defect"] = defect;
  res["coarea_thresholds"] = d.coarea_thresholds;
  res["binary_coarea_defect"] = binary_defect;
  report.tolerances()["coarea_tol"] = d.coarea_tol;
  report.tolerances()["binary_coarea_tol"] = d.binary_coarea_tol;
  report.add_check("coarea_defect", defect <= d.coarea_tol, defect, d.coarea_tol, "<=");
  report.add_check("binary_coarea_exact", binary_defect <= d.binary_coarea_tol,
                   binary_defect, d.binary_coarea_tol, "<=");
  if (sink.csv) write_csv(sink.path("density.csv"), {"x", "y", "z", "density_ratio"}, rows);
  if (sink.images && g.dim == 2) write_pbm(sink.path("levelset.pbm"), E);
  report.set_metadata("diagnostic_seconds", seconds_since(t0));
}

void cmd_blowup(const ConfigFile& cfg, RunReport& report, const OutputSink& sink) {
  SolveSetup s = parse_solve_setup(cfg);
  Diagnostics d = parse_diagnostics(cfg);
  cfg.assert_all_consumed();

  auto t0 = Clock::now();
  SolveResult r = solve(s.spec, s.opts);
  report.set_metadata("solve_seconds", seconds_since(t0));
  record_solve(report, r, s.opts, sink);
  dump_solution(sink, r);

  t0 = Clock::now();
  const GridSpec& g = r.u.grid;
  LevelSetView E = upper_level_set(r.u, mid_threshold(r.u, d.level_threshold));
  auto pts = boundary_sample_points(E, d.trace_points);
  std::vector<double> radii;
  for (double k : d.blowup_radii_h) radii.push_back(k * g.h);

  std::vector<double> residuals;
  std::vector<Accumulator> osc_sum(radii.size());
  std::vector<std::vector<double>> rows;
  int skipped = 0;
  for (const Vec& x : pts) {
    try {
      NormalLimitCheck nl = normal_limit_check(r.z, E, s.model, x, radii);
      residuals.push_back(nl.residual);
      std::vector<double> row{x[0], x[1], x[2], nl.residual};
      for (std::size_t i = 0; i < radii.size(); ++i) {
        osc_sum[i].add(nl.series.oscillations[i]);
        row.push_back(nl.series.oscillations[i]);
      }
      rows.push_back(std::move(row));
    } catch (const non_reduced_point_error&) {
      ++skipped;
    }
  }
  if (residuals.empty())
    throw empty_region_error("blowup: no usable boundary points on the solved level set");

  double med = median_of(residuals);
  // the quantity the refinement statement controls is the boundary-averaged
  // oscillation, so monotonicity is checked on the ensemble mean
  std::vector<double> mean_osc;
  for (auto& a : osc_sum) mean_osc.push_back(a.value() / double(residuals.size()));
  bool monotone = true;
  for (std::size_t i = 0; i + 1 < mean_osc.size(); ++i)
    if (mean_osc[i + 1] > mean_osc[i] + 1e-12) monotone = false;

  auto& res = report.results();
  res["boundary_points_used"] = static_cast<int>(residuals.size());
  res["boundary_points_skipped"] = skipped;
  res["residual_median"] = med;
  res["radii"] = radii;
  res["mean_oscillation"] = mean_osc;
  report.tolerances()["blowup_tol"] = d.blowup_tol;
  report.add_check("blowup_residual_median", med <= d.blowup_tol, med, d.blowup_tol, "<=");
  report.add_check("mean_oscillation_monotone", monotone, monotone ? 1.0 : 0.0, 1.0, "==");
  if (sink.csv) {
    std::vector<std::string> header{"x", "y", "z", "residual"};
    for (double k : d.blowup_radii_h)
      header.push_back("osc_" + std::to_string(static_cast<int>(k)) + "h");
    write_csv(sink.path("blowup.csv"), header, rows);
  }
  report.set_metadata("diagnostic_seconds", seconds_since(t0));
}

void cmd_counterexample(const ConfigFile& cfg, RunReport& report, const OutputSink& sink) {
  NestedBallField f;
  f.dim = static_cast<int>(cfg.get_int("counterexample.dim", 2));
  f.epsilon = cfg.get_double("counterexample.epsilon", 0.5);
  f.delta = cfg.get_double("counterexample.delta", f.dim == 3 ? 1e-3 : 1e-2);
  long depth = cfg.get_int("counterexample.depth", 5);
  if (cfg.has("counterexample.radii")) {
    f.radii = cfg.get_double_list("counterexample.radii", {});
  } else {
    if (depth < 1 || depth > 6)
      throw config_error("counterexample.depth must lie in 1..6 (radii underflow beyond)");
    for (long n = 2; n < 2 + depth; ++n)
      f.radii.push_back(std::exp2(-std::exp2(double(n))));
  }
  int nodes = static_cast<int>(cfg.get_int("counterexample.quadrature_nodes", 10000));
  long raster_n = cfg.get_int("counterexample.rasterize_n", 0);
  cfg.assert_all_consumed();
  f.validate();

  auto t0 = Clock::now();
  OscillationReport osc = oscillation_report(f, nodes);
  double p = f.dim - f.epsilon;
  auto mass = f.div_lp_norm(p, nodes);
  double omega = f.dim == 2 ? 3.14159265358979323846 : 4.18879020478639098462;
  Accumulator bound;
  for (double r : f.radii) bound.add(omega * std::pow(r, f.epsilon));

  auto& res = report.results();
  res["dimension"] = f.dim;
  res["epsilon"] = f.epsilon;
  res["delta"] = f.delta;
  res["radii"] = f.radii;
  res["large_ball_averages"] = osc.large_ball;
  res["small_ball_averages"] = osc.small_ball;
  res["oscillation_gap"] = osc.gap;
  res["div_lp_exponent"] = p;
  res["div_lp_mass"] = mass.value;
  res["div_lp_volume_bound"] = bound.value();
  report.tolerances()["large_ball_bound"] = osc.large_bound;
  report.tolerances()["small_ball_bound"] = osc.small_bound;
  report.tolerances()["gap_lower_bound"] = osc.gap_lower_bound;
  for (std::size_t n = 0; n < osc.large_ball.size(); ++n)
    report.add_check("large_ball_average_" + std::to_string(n + 1),
                     osc.large_ball[n] <= osc.large_bound, osc.large_ball[n],
                     osc.large_bound, "<=");
  for (std::size_t n = 0; n < osc.small_ball.size(); ++n)
    report.add_check("small_ball_average_" + std::to_string(n + 1),
                     osc.small_ball[n] >= osc.small_bound, osc.small_ball[n],
                     osc.small_bound, ">=");
  report.add_check("oscillation_gap", osc.gap >= osc.gap_lower_bound, osc.gap,
                   osc.gap_lower_bound, ">=");
  report.add_check("div_mass_bound", mass.value <= bound.value() * 1.01, mass.value,
                   bound.value() * 1.01, "<=");

  if (sink.csv) {
    std::vector<std::vector<double>> rows;
    for (std::size_t n = 0; n < osc.large_ball.size(); ++n)
      rows.push_back({double(n + 1), f.radii[n], osc.large_ball[n],
                      n < osc.small_ball.size() ? osc.small_ball[n]
                                                : std::numeric_limits<double>::quiet_NaN()});
    write_csv(sink.path("averages.csv"),
              {"n", "radius", "large_ball_average", "small_ball_average"}, rows);
  }
  if (raster_n > 0 && f.dim == 2) {
    GridSpec g = GridSpec::box(2, {static_cast<int>(raster_n), static_cast<int>(raster_n), 1},
                               2.0 / double(raster_n), Vec{-1.0, -1.0, 0.0});
    g.mask.assign(g.cell_count(), 0);
    for (std::size_t c = 0; c < g.cell_count(); ++c)
      if (norm(g.cell_center(c), 2) <= 1.0) g.mask[c] = 1;
    VectorField z = f.rasterize(g);
    if (sink.fields) write_field(sink.path("field.field"), z);
    if (sink.images) {
      ScalarField zd{g, z.comp[1]};
      write_pgm(sink.path("field_vertical.pgm"), zd, 0.0, 1.0);
    }
  }
  report.set_metadata("diagnostic_seconds", seconds_since(t0));
}

void cmd_selftest(const ConfigFile& cfg, RunReport& report, const OutputSink&) {
  long seed = cfg.get_int("selftest.seed", 1);
  cfg.assert_all_consumed();
  auto t0 = Clock::now();
  Rng rng(static_cast<std::uint64_t>(seed));

  // adjointness of gradient and divergence on random masked fields
  for (int dim : {2, 3}) {
    GridSpec g = dim == 2 ? GridSpec::unit_square(64) : GridSpec::unit_cube(24);
    ScalarField u = ScalarField::zeros(g);
    VectorField z = VectorField::zeros(g);
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
      u.v[c] = rng.uniform(-1.0, 1.0);
      for (int i = 0; i < dim; ++i) z.comp[i][c] = rng.uniform(-1.0, 1.0);
    }
    VectorField gu = VectorField::zeros(g);
    gradient_into(u, gu);
    ScalarField dz = ScalarField::zeros(g);
    divergence_into(z, dz);
    Accumulator a, scale;
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
      if (!g.active(c)) continue;
      for (int i = 0; i < dim; ++i) {
        a.add(gu.comp[i][c] * z.comp[i][c]);
        scale.add(std::abs(gu.comp[i][c] * z.comp[i][c]));
      }
      a.add(u.v[c] * dz.v[c]);
      scale.add(std::abs(u.v[c] * dz.v[c]));
    }
    double rel = std::abs(a.value()) / std::max(scale.value(), 1e-300);
    report.add_check("adjoint_identity_" + std::to_string(dim) + "d", rel <= 1e-12, rel,
                     1e-12, "<=");
  }

  // anisotropy calculus on random samples, all three families
  {
    std::array<double, 9> metric{2.0, 0.3, 0.0, 0.3, 1.0, 0.0, 0.0, 0.0, 1.5};
    AnisotropyModel models[] = {AnisotropyModel::euclidean(2),
                                AnisotropyModel::weighted_euclidean(2, 1.0, 0.3),
                                AnisotropyModel::riemannian(3, metric, 0.2)};
    double worst_euler = 0.0, worst_homog = 0.0, worst_feas = 0.0;
    for (const auto& m : models) {
      int dim = m.dimension();
      for (int trial = 0; trial < 200; ++trial) {
        Vec x{rng.uniform(), rng.uniform(), dim == 3 ? rng.uniform() : 0.0};
        Vec pvec{0, 0, 0};
        for (int i = 0; i < dim; ++i) pvec[i] = rng.uniform(-1.0, 1.0);
        if (norm(pvec, dim) < 1e-6) continue;
        double fv = m.eval(x, pvec);
        worst_euler = std::max(worst_euler,
                               std::abs(dot(m.grad(x, pvec), pvec, dim) - fv) / fv);
        worst_homog = std::max(
            worst_homog, std::abs(m.eval(x, scaled(pvec, 2.0, dim)) - 2.0 * fv) / (2.0 * fv));
        Vec proj = m.euclidean_project(x, scaled(pvec, 3.0, dim));
        worst_feas = std::max(worst_feas, m.polar(x, proj) - 1.0);
      }
    }
    report.add_check("euler_identity", worst_euler <= 1e-10, worst_euler, 1e-10, "<=");
    report.add_check("homogeneity", worst_homog <= 1e-12, worst_homog, 1e-12, "<=");
    report.add_check("projection_feasible", worst_feas <= 1e-12, worst_feas, 1e-12, "<=");
  }

  // closed-form calibrated pair is exact where it should be
  {
    GridSpec g = GridSpec::unit_square(128);
    auto model = AnisotropyModel::euclidean(2);
    BallPair pair = analytic_ball_pair(g, Vec{0.5, 0.5, 0.0}, 0.25, 32.0);
    CalibrationReport rep = verify_subgradient(pair.u, pair.z, pair.g, model);
    report.add_check("pair_feasibility_excess", rep.feasibility_excess <= 1e-12,
                     rep.feasibility_excess, 1e-12, "<=");
    report.add_check("pair_divergence_exact", rep.div_residual_rel <= 1e-12,
                     rep.div_residual_rel, 1e-12, "<=");
    report.add_check("pair_pairing_residual", rep.pairing_residual_rel <= 0.05,
                     rep.pairing_residual_rel, 0.05, "<=");
  }

  // a small end-to-end solve with a valid certificate
  {
    GridSpec g = GridSpec::unit_square(64);
    auto model = AnisotropyModel::euclidean(2);
    ScalarField fld = ScalarField::cell_average(
        g,
        [&](const Vec& x) { return dist(x, Vec{0.5, 0.5, 0.0}, 2) <= 0.25 ? 1.0 : 0.0; },
        8);
    SolveResult r = solve(ProblemSpec::rof(model, fld, 32.0), SolveOptions{});
    CalibrationReport rep = verify_subgradient(r, model);
    report.add_check("solve_converged", r.gap <= 1e-5, r.gap, 1e-5, "<=");
    report.add_check("solve_feasibility_excess", rep.feasibility_excess <= 1e-9,
                     rep.feasibility_excess, 1e-9, "<=");
    report.add_check("solve_divergence_residual", rep.div_residual_rel <= 1e-10,
                     rep.div_residual_rel, 1e-10, "<=");
  }
  report.set_metadata("selftest_seconds", seconds_since(t0));
}

} // namespace

RunOutcome run_config(const ConfigFile& cfg) {
  auto t_total = Clock::now();
  std::string command = cfg.require_string("run.command");
  OutputSink sink = parse_output(cfg);
  RunReport report(command, cfg);

  if (command == "solve")
    cmd_solve(cfg, report, sink);
  else if (command == "verify")
    cmd_verify(cfg, report, sink);
  else if (command == "levelset")
    cmd_levelset(cfg, report, sink);
  else if (command == "blowup")
    cmd_blowup(cfg, report, sink);
  else if (command == "counterexample")
    cmd_counterexample(cfg, report, sink);
  else if (command == "selftest")
    cmd_selftest(cfg, report, sink);
  else
    throw config_error("run.command must be one of solve, verify, levelset, blowup, "
                       "counterexample, selftest (got: " + command + ")");

  report.set_metadata("total_seconds", seconds_since(t_total));
  RunOutcome out;
  out.checks_passed = report.all_passed();
  out.checks_total = report.check_count();
  out.exit_code = out.checks_passed ? 0 : 2;
  if (sink.json) {
    out.report_path = sink.path(command + "_report.json");
    report.write(out.report_path);
  }
  out.summary = command + ": " +
                (out.checks_passed
                     ? "all " + std::to_string(out.checks_total) + " checks passed"
                     : "some of " + std::to_string(out.checks_total) + " checks FAILED") +
                (out.report_path.empty() ? "" : " -> " + out.report_path);
  return out;
}

RunOutcome run(const std::string& config_path) {
  return run_config(ConfigFile::parse_file(config_path));
}

} // namespace atv
