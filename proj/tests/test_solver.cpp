#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "atv/energy.hpp"
#include "atv/errors.hpp"
#include "atv/geometry.hpp"
#include "atv/pairing.hpp"
#include "atv/solver.hpp"
#include "oracles.hpp"

using namespace atv;

namespace {

ScalarField disc_datum(const GridSpec& g, Vec c, double R) {
  return ScalarField::cell_average(
      g, [&](const Vec& x) { return dist(x, c, g.dim) <= R ? 1.0 : 0.0; }, 8);
}

} // namespace

TEST_CASE("constant datum is returned unchanged with a zero certificate") {
  GridSpec g = GridSpec::unit_square(32);
  auto model = AnisotropyModel::euclidean(2);
  auto spec = ProblemSpec::rof(model, ScalarField::constant(g, 0.7), 8.0);
  SolveResult r = solve(spec, SolveOptions{});
  CHECK(r.iterations == 0);
  CHECK(r.gap <= 1e-12);
  CHECK(r.gap >= -1e-12);
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    CHECK(r.u.v[c] == doctest::Approx(0.7).epsilon(1e-14));
    CHECK(r.z.comp[0][c] == 0.0);
    CHECK(r.z.comp[1][c] == 0.0);
    CHECK(r.g.v[c] == doctest::Approx(0.0).epsilon(1e-14));
  }
}

TEST_CASE("stripe datum reproduces the 1D closed form and the 1D dynamic-programming solve") {
  const int n = 64;
  GridSpec g = GridSpec::unit_square(n);
  auto model = AnisotropyModel::euclidean(2);
  ScalarField f = ScalarField::sample(g, [](const Vec& x) { return x[0] > 0.5 ? 1.0 : 0.0; });
  const double lambda = 16.0;
  auto spec = ProblemSpec::rof(model, f, lambda);
  SolveOptions opts;
  opts.gap_tol = 1e-7;
  SolveResult r = solve(spec, opts);
  CHECK(r.gap <= 1e-7);

  // rows are identical (the problem is 1D in disguise)
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      CHECK(std::abs(r.u.v[g.index(i, j)] - r.u.v[g.index(i, 0)]) <= 1e-9);

  // closed form: each half-domain plateau moves toward the other by
  // 1 / (lambda * half-width) = 1 / (16 * 0.5) = 0.125
  CHECK(r.u.v[g.index(0, 32)] == doctest::Approx(0.125).epsilon(5e-4));
  CHECK(r.u.v[g.index(n - 1, 32)] == doctest::Approx(0.875).epsilon(5e-4));

  // dual certificate saturates across the jump column
  double zmean = 0.0;
  for (int j = 0; j < n; ++j) zmean += r.z.comp[0][g.index(31, j)];
  CHECK(zmean / n == doctest::Approx(1.0).epsilon(1e-4));

  // cross-check the whole profile against the 1D dynamic-programming oracle:
  // per row the energy is h * (sum |du| + (lambda h / 2) sum (u - f)^2)
  std::vector<double> f1(n);
  for (int i = 0; i < n; ++i) f1[i] = f.v[g.index(i, 0)];
  std::vector<double> dp = oracle::dp_rof_1d(f1, lambda * g.h, 2048);
  for (int i = 0; i < n; ++i)
    CHECK(std::abs(r.u.v[g.index(i, 5)] - dp[i]) <= 3e-3);

  // and the attained energies agree: for a row-constant field the 2D energy
  // reduces to the 1D objective with mu = lambda h (the n h = 1 row heights
  // absorb one h of the cell volume, the 1/h of the difference quotient the
  // other), so the oracle's value is directly comparable
  double dp_energy = 0.0;
  for (int i = 0; i + 1 < n; ++i) dp_energy += std::abs(dp[i + 1] - dp[i]);
  for (int i = 0; i < n; ++i)
    dp_energy += 0.5 * lambda * g.h * (dp[i] - f1[i]) * (dp[i] - f1[i]);
  CHECK(r.primal_energy == doctest::Approx(dp_energy).epsilon(2e-3));
}

TEST_CASE("disc datum meets the plateau, certificate, and calibration contracts") {
  const int n = 128;
  GridSpec g = GridSpec::unit_square(n);
  auto model = AnisotropyModel::euclidean(2);
  Vec c0{0.5, 0.5, 0};
  auto spec = ProblemSpec::rof(model, disc_datum(g, c0, 0.25), 32.0);
  SolveOptions opts;
  opts.record_history = true;
  SolveResult r = solve(spec, opts);

  CHECK(r.gap <= 1e-5);
  CHECK(r.gap >= -1e-12);
  CHECK(r.iterations < 20000);

  // plateau value of the known solution: 1 - 2/(lambda R) = 0.75
  double plateau = ball_average(r.u, c0, 0.125);
  CHECK(plateau == doctest::Approx(0.75).epsilon(0.02));

  CalibrationReport rep = verify_subgradient(r, model);
  CHECK(rep.feasibility_excess <= 1e-9);
  CHECK(rep.div_residual_rel <= 1e-10);  // exact recovery map, rounding only
  CHECK(rep.pairing_residual_rel <= 0.01);
  CHECK(rep.pairing_residual_rel >= -1e-12);
  CHECK(rep.min_cell_defect >= -1e-10);

  // recorded gap history is a certificate: nonnegative and nonincreasing
  REQUIRE(!r.history.empty());
  for (const GapSample& s : r.history) CHECK(s.gap >= -1e-12);
  for (std::size_t a = 0; a < r.history.size(); ++a)
    for (std::size_t b = a + 1; b < r.history.size(); ++b) {
      if (r.history[b].iteration - r.history[a].iteration < 100) continue;
      CHECK(r.history[b].gap <= r.history[a].gap + 1e-12);
      break;
    }
}

TEST_CASE("returned g is a subgradient of the total variation seminorm") {
  const int n = 64;
  GridSpec g = GridSpec::unit_square(n);
  auto model = AnisotropyModel::euclidean(2);
  auto spec = ProblemSpec::rof(model, disc_datum(g, Vec{0.5, 0.5, 0}, 0.25), 32.0);
  SolveResult r = solve(spec, SolveOptions{});
  const double hd = g.cell_volume();

  double ju = tv_energy(r.u, model);
  oracle::Rng rng(4242);
  for (int trial = 0; trial < 20; ++trial) {
    ScalarField v = r.u;
    if (trial % 2 == 0) {
      // independent cellwise noise
      double amp = (trial % 4 == 0) ? 1.0 : 0.02;
      for (std::size_t c = 0; c < g.cell_count(); ++c) v.v[c] += amp * rng.uniform(-1.0, 1.0);
    } else {
      // a smooth bump of random center/width/sign
      Vec cb{rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8), 0};
      double w = rng.uniform(0.05, 0.3), s = rng.uniform(-0.5, 0.5);
      for (std::size_t c = 0; c < g.cell_count(); ++c) {
        Vec x = g.cell_center(c);
        double d2 = dot(sub(x, cb, 2), sub(x, cb, 2), 2);
        v.v[c] += s * std::exp(-d2 / (w * w));
      }
    }
    double jv = tv_energy(v, model);
    Accumulator lin;
    for (std::size_t c = 0; c < g.cell_count(); ++c) lin.add(r.g.v[c] * (v.v[c] - r.u.v[c]));
    CHECK(jv - ju >= lin.value() * hd - 1e-8);
  }
}

TEST_CASE("oversized steps are reported as divergence on the default path") {
  GridSpec g = GridSpec::unit_square(32);
  auto model = AnisotropyModel::euclidean(2);
  auto spec = ProblemSpec::rof(model, disc_datum(g, Vec{0.5, 0.5, 0}, 0.25), 32.0);
  SolveOptions opts;
  opts.step_scale = 4.0;
  CHECK_THROWS_AS(solve(spec, opts), solver_diverged_error);
}

TEST_CASE("oversized steps on the fixed-step path never fake convergence") {
  // the projections keep the fixed-step iteration bounded, so an unstable
  // step oscillates instead of escaping; the certificate must stay honest
  GridSpec g = GridSpec::unit_square(32);
  auto model = AnisotropyModel::euclidean(2);
  auto spec = ProblemSpec::rof(model, disc_datum(g, Vec{0.5, 0.5, 0}, 0.25), 32.0);
  SolveOptions opts;
  opts.step_scale = 4.0;
  opts.accelerate = false;
  opts.max_iters = 2000;
  SolveResult r = solve(spec, opts);
  CHECK(r.iterations == 2000);
  CHECK(r.gap > 0.1);
}

TEST_CASE("solve rejects malformed options") {
  GridSpec g = GridSpec::unit_square(8);
  auto model = AnisotropyModel::euclidean(2);
  auto spec = ProblemSpec::rof(model, ScalarField::constant(g, 1.0), 4.0);
  SolveOptions opts;
  opts.max_iters = -1;
  CHECK_THROWS_AS(solve(spec, opts), invalid_input_error);
  opts = SolveOptions{};
  opts.gap_tol = 0.0;
  CHECK_THROWS_AS(solve(spec, opts), invalid_input_error);
  opts = SolveOptions{};
  opts.check_every = 0;
  CHECK_THROWS_AS(solve(spec, opts), invalid_input_error);
  opts = SolveOptions{};
  opts.step_scale = -2.0;
  CHECK_THROWS_AS(solve(spec, opts), invalid_input_error);
  CHECK_THROWS_AS(ProblemSpec::rof(model, ScalarField::constant(g, 1.0), 0.0),
                  invalid_input_error);
}

TEST_CASE("primal energy matches hand counts") {
  const int n = 32;
  GridSpec g = GridSpec::unit_square(n);
  auto model = AnisotropyModel::euclidean(2);

  ScalarField cst = ScalarField::constant(g, 3.0);
  auto spec_c = ProblemSpec::rof(model, cst, 2.0);
  CHECK(primal_energy(cst, spec_c) == 0.0);

  // u = x1: unit gradient on all but the closure column -> (1 - h) |Omega|
  ScalarField ramp = ScalarField::sample(g, [](const Vec& x) { return x[0]; });
  auto spec_r = ProblemSpec::rof(model, ramp, 2.0);
  CHECK(primal_energy(ramp, spec_r) == doctest::Approx(1.0 - g.h).epsilon(1e-12));

  // one vertical interface of height 1 -> energy exactly 1
  ScalarField stripe = ScalarField::sample(g, [](const Vec& x) { return x[0] > 0.5 ? 1.0 : 0.0; });
  auto spec_s = ProblemSpec::rof(model, stripe, 2.0);
  CHECK(primal_energy(stripe, spec_s) == doctest::Approx(1.0).epsilon(1e-12));

  // the data term adds (lambda/2) sum (u-f)^2 h^d: here u-f = stripe,
  // which is 1 on exactly half the cells -> (8/2) * 1 * 1/2 = 2
  auto spec_sd = ProblemSpec::rof(model, ScalarField::constant(g, 0.0), 8.0);
  CHECK(primal_energy(stripe, spec_sd) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("weak duality holds for random feasible dual fields") {
  GridSpec g = GridSpec::unit_square(24);
  auto model = AnisotropyModel::euclidean(2);
  oracle::Rng rng(777);
  ScalarField f = ScalarField::zeros(g);
  for (auto& v : f.v) v = rng.uniform(-1.0, 1.0);
  auto spec = ProblemSpec::rof(model, f, 5.0);

  CHECK(dual_energy(VectorField::zeros(g), spec) == 0.0);
  for (int trial = 0; trial < 5; ++trial) {
    ScalarField u = ScalarField::zeros(g);
    VectorField z = VectorField::zeros(g);
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
      u.v[c] = rng.uniform(-2.0, 2.0);
      z.comp[0][c] = rng.uniform(-0.7, 0.7);
      z.comp[1][c] = rng.uniform(-0.7, 0.7);
    }
    double p = primal_energy(u, spec), d = dual_energy(z, spec);
    CHECK(d <= p + 1e-12 * std::max(std::abs(p), std::abs(d)));
  }
}

TEST_CASE("calibration report degenerate cases") {
  GridSpec g = GridSpec::unit_square(24);
  auto model = AnisotropyModel::euclidean(2);
  ScalarField u = ScalarField::sample(g, [](const Vec& x) { return x[0] > 0.5 ? 1.0 : 0.0; });
  ScalarField zero = ScalarField::zeros(g);

  // z = 0: the pairing residual is the whole energy, exactly
  CalibrationReport rep = verify_subgradient(u, VectorField::zeros(g), zero, model);
  CHECK(rep.pairing_residual_abs == doctest::Approx(rep.tv_energy_value).epsilon(1e-14));
  CHECK(rep.pairing_residual_rel == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(rep.feasibility_excess == 0.0);

  // constant u with a feasible flux: only the divergence residual survives
  VectorField z = VectorField::sample(g, [](const Vec& x) {
    return Vec{0.3 * std::sin(6.0 * x[1]), 0.3 * std::cos(5.0 * x[0]), 0.0};
  });
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    double n2 = std::hypot(z.comp[0][c], z.comp[1][c]);
    CHECK(n2 <= 1.0);
  }
  CalibrationReport rc = verify_subgradient(ScalarField::constant(g, 2.0), z, zero, model);
  CHECK(rc.pairing_residual_abs == 0.0);
  CHECK(rc.tv_energy_value == 0.0);
  CHECK(rc.min_cell_defect == 0.0);
  CHECK(rc.div_residual_abs > 0.0);

  // mismatched shapes are rejected
  GridSpec g2 = GridSpec::unit_square(16);
  CHECK_THROWS_AS(verify_subgradient(ScalarField::zeros(g2), z, zero, model),
                  invalid_input_error);
}

TEST_CASE("analytic ball pair is an exact-feasibility calibration") {
  GridSpec g = GridSpec::unit_square(256);
  auto model = AnisotropyModel::euclidean(2);
  Vec c0{0.5, 0.5, 0};
  BallPair pair = analytic_ball_pair(g, c0, 0.25, 32.0);
  CHECK(pair.plateau == doctest::Approx(0.75).epsilon(1e-14));

  CalibrationReport rep = verify_subgradient(pair.u, pair.z, pair.g, model);
  CHECK(rep.feasibility_excess <= 1e-12);
  CHECK(rep.div_residual_rel <= 1e-12);  // g := -div z by construction
  CHECK(rep.min_cell_defect >= -1e-12);
  CHECK(rep.pairing_residual_rel <= 0.05);
  CHECK(rep.pairing_residual_rel >= 0.0);

  // normal traces at 32 boundary points sit within 0.05 of 1
  LevelSetView E = upper_level_set(pair.u, pair.plateau / 2);
  auto pts = boundary_sample_points(E, 32);
  REQUIRE(pts.size() >= 32);
  for (const Vec& x : pts) {
    double tr = normal_trace(pair.z, E, x, 2 * g.h, 8 * g.h);
    CHECK(tr == doctest::Approx(1.0).epsilon(0.05));
  }

  CHECK_THROWS_AS(analytic_ball_pair(g, c0, 2.0 * g.h, 32.0), invalid_input_error);
  CHECK_THROWS_AS(analytic_ball_pair(g, c0, 0.25, 7.9), invalid_input_error);
  CHECK_THROWS_AS(analytic_ball_pair(g, c0, 0.25, 32.0, 0.0), invalid_input_error);
}

TEST_CASE("prescribed divergence extracts a feasible flux for a realizable datum") {
  const int n = 64;
  GridSpec g = GridSpec::unit_square(n);
  auto model = AnisotropyModel::euclidean(2);
  BallPair pair = analytic_ball_pair(g, Vec{0.5, 0.5, 0}, 0.25, 32.0);
  std::vector<std::uint8_t> fixed(g.cell_count(), 0);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (i < 2 || j < 2 || i >= n - 2 || j >= n - 2) fixed[g.index(i, j)] = 1;
  auto spec =
      ProblemSpec::prescribed_divergence(model, pair.g, ScalarField::zeros(g), fixed);
  SolveOptions opts;
  opts.gap_tol = 1e-4;
  SolveResult r = solve(spec, opts);
  CHECK(r.gap <= 1e-4);
  CalibrationReport rep = verify_subgradient(r, model);
  CHECK(rep.feasibility_excess <= 1e-9);
  CHECK(rep.div_residual_rel <= 1e-8);
  CHECK(rep.min_cell_defect >= -1e-10);
}

TEST_CASE("prescribed divergence rejects an unrealizable datum") {
  const int n = 32;
  GridSpec g = GridSpec::unit_square(n);
  auto model = AnisotropyModel::euclidean(2);
  std::vector<std::uint8_t> fixed(g.cell_count(), 0);
  for (int i = 0; i < n; ++i) fixed[g.index(i, 0)] = 1;
  auto spec = ProblemSpec::prescribed_divergence(model, ScalarField::constant(g, 3000.0),
                                                 ScalarField::zeros(g), fixed);
  CHECK_THROWS_AS(solve(spec, SolveOptions{}), invalid_input_error);
}

TEST_CASE("prescribed divergence with boundary forcing solves the minimal-interface problem") {
  const int n = 64;
  GridSpec g = GridSpec::unit_square(n);
  auto model = AnisotropyModel::euclidean(2);
  Vec c0{0.5, 0.5, 0};
  const double r0 = 0.2;
  std::vector<std::uint8_t> fixed(g.cell_count(), 0);
  ScalarField dir = ScalarField::zeros(g);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      std::size_t c = g.index(i, j);
      if (dist(g.cell_center(i, j), c0, 2) <= r0) {
        fixed[c] = 1;
        dir.v[c] = 1.0;
      } else if (i < 2 || j < 2 || i >= n - 2 || j >= n - 2) {
        fixed[c] = 1;
      }
    }
  auto spec = ProblemSpec::prescribed_divergence(model, ScalarField::zeros(g), dir, fixed);
  SolveOptions opts;
  opts.gap_tol = 1e-3;
  SolveResult r = solve(spec, opts);
  CHECK(r.gap <= 1e-3);
  CHECK(r.iterations < 20000);

  CalibrationReport rep = verify_subgradient(r, model);
  CHECK(rep.feasibility_excess <= 1e-9);
  CHECK(rep.pairing_residual_rel <= 0.01);
  CHECK(rep.div_residual_abs <= 1e-3);  // datum is zero: absolute residual
  CHECK(rep.min_cell_defect >= -1e-10);

  // the minimal interface hugs the clamped disc: energy near its perimeter
  // (above the continuum value by the crystalline bias, well below 8 r0)
  CHECK(r.primal_energy > 2 * M_PI * r0 * 0.95);
  CHECK(r.primal_energy < 2 * M_PI * r0 * 1.20);

  // and u collapses outside: tiny mass on free cells
  double mass = 0.0;
  for (std::size_t c = 0; c < g.cell_count(); ++c)
    if (g.active(c) && !fixed[c]) mass += std::abs(r.u.v[c]) * g.cell_volume();
  CHECK(mass <= 0.02);
}

TEST_CASE("three-dimensional ball meets the same contracts") {
  GridSpec g = GridSpec::unit_cube(24);
  auto m3 = AnisotropyModel::euclidean(3);
  Vec c0{0.5, 0.5, 0.5};
  ScalarField f = ScalarField::cell_average(
      g, [&](const Vec& x) { return dist(x, c0, 3) <= 0.3 ? 1.0 : 0.0; }, 4);
  auto spec = ProblemSpec::rof(m3, f, 40.0);
  SolveResult r = solve(spec, SolveOptions{});
  CHECK(r.gap <= 1e-5);

  // plateau 1 - 3/(lambda R) = 0.75, coarse-grid slack
  double plateau = ball_average(r.u, c0, 0.15);
  CHECK(plateau == doctest::Approx(0.75).epsilon(0.03));

  CalibrationReport rep = verify_subgradient(r, m3);
  CHECK(rep.feasibility_excess <= 1e-9);
  CHECK(rep.div_residual_rel <= 1e-10);
  CHECK(rep.pairing_residual_rel <= 0.01);
  CHECK(rep.min_cell_defect >= -1e-10);
}
