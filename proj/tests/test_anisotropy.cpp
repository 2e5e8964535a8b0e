#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "atv/anisotropy.hpp"
#include "oracles.hpp"

using namespace atv;

namespace {

std::vector<AnisotropyModel> sample_models() {
  std::array<double, 9> diag14{1, 0, 0, 0, 4, 0, 0, 0, 1};
  // diag(1,4) rotated by 30 degrees: same spectrum, dense entries
  double c = std::cos(M_PI / 6), s = std::sin(M_PI / 6);
  std::array<double, 9> rot{c * c + 4 * s * s, 3 * s * c, 0,
                            3 * s * c,         s * s + 4 * c * c, 0,
                            0,                 0,                 1};
  std::array<double, 9> spd3{2.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 3.0};
  return {
      AnisotropyModel::euclidean(2),
      AnisotropyModel::euclidean(3),
      AnisotropyModel::weighted_euclidean(2, 1.0, 0.3),
      AnisotropyModel::weighted_euclidean(3, 2.0, 0.5),
      AnisotropyModel::riemannian(2, diag14, 0.0),
      AnisotropyModel::riemannian(2, rot, 0.25),
      AnisotropyModel::riemannian(3, spd3, 0.2),
  };
}

} // namespace

TEST_CASE("hand-checked values, euclidean") {
  auto m = AnisotropyModel::euclidean(2);
  Vec x{0.3, 0.7, 0};
  CHECK(m.eval(x, {3, 4, 0}) == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(m.polar(x, {3, 4, 0}) == doctest::Approx(5.0).epsilon(1e-14));
  Vec g = m.grad(x, {3, 4, 0});
  CHECK(g[0] == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(g[1] == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(m.c0() == 1.0);
  CHECK(m.delta() == 1.0);
  CHECK(m.polar_delta() == 1.0);
}

TEST_CASE("hand-checked values, diag(1,4) metric") {
  std::array<double, 9> a{1, 0, 0, 0, 4, 0, 0, 0, 1};
  auto m = AnisotropyModel::riemannian(2, a, 0.0);
  Vec x{0, 0, 0};
  CHECK(m.eval(x, {0, 1, 0}) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(m.polar(x, {0, 1, 0}) == doctest::Approx(0.5).epsilon(1e-14));
  Vec g = m.grad(x, {0, 1, 0});
  CHECK(g[0] == doctest::Approx(0.0));
  CHECK(g[1] == doctest::Approx(2.0).epsilon(1e-14));
  Vec pg = m.polar_grad(x, {0, 1, 0});
  CHECK(pg[1] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(m.c0() == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(m.delta() == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(m.polar_delta() == doctest::Approx(0.25).epsilon(1e-14));
  // F^2(y) - F^2(z) - grad F^2(z).(y-z) - delta^2 |y-z|^2 at y=(0,1), z=(1,0)
  CHECK(m.convexity_residual(x, {0, 1, 0}, {1, 0, 0}) == doctest::Approx(4.5).epsilon(1e-14));
  CHECK(m.metric_eigenvalues()[0] == doctest::Approx(1.0));
  CHECK(m.metric_eigenvalues()[1] == doctest::Approx(4.0));
}

TEST_CASE("eigendecomposition of a rotated metric") {
  double c = std::cos(M_PI / 6), s = std::sin(M_PI / 6);
  std::array<double, 9> rot{c * c + 4 * s * s, 3 * s * c, 0,
                            3 * s * c,         s * s + 4 * c * c, 0,
                            0,                 0,                 1};
  auto m = AnisotropyModel::riemannian(2, rot, 0.0);
  CHECK(m.metric_eigenvalues()[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.metric_eigenvalues()[1] == doctest::Approx(4.0).epsilon(1e-12));
  // columns of metric_eigenvectors are eigenvectors: A v = lambda v
  const auto& A = m.metric();
  const auto& V = m.metric_eigenvectors();
  for (int col = 0; col < 2; ++col) {
    double lambda = m.metric_eigenvalues()[col];
    for (int r = 0; r < 2; ++r) {
      double av = A[r * 3 + 0] * V[0 * 3 + col] + A[r * 3 + 1] * V[1 * 3 + col];
      CHECK(av == doctest::Approx(lambda * V[r * 3 + col]).epsilon(1e-12));
    }
  }
}

TEST_CASE("homogeneity and Euler identity") {
  oracle::Rng rng(41);
  for (const auto& m : sample_models()) {
    const int d = m.dimension();
    for (int trial = 0; trial < 200; ++trial) {
      Vec x = rng.box(d, 0.0, 1.0);
      Vec p = rng.gauss_vec(d);
      if (norm(p, d) < 1e-8) continue;
      double f = m.eval(x, p);
      double t = rng.uniform(0.1, 10.0);
      CHECK(m.eval(x, scaled(p, t, d)) == doctest::Approx(t * f).epsilon(1e-12));
      CHECK(dot(p, m.grad(x, p), d) == doctest::Approx(f).epsilon(1e-12));
      double fp = m.polar(x, p);
      CHECK(m.polar(x, scaled(p, t, d)) == doctest::Approx(t * fp).epsilon(1e-12));
      CHECK(dot(p, m.polar_grad(x, p), d) == doctest::Approx(fp).epsilon(1e-12));
    }
  }
}

TEST_CASE("ellipticity bounds hold with the advertised c0") {
  oracle::Rng rng(42);
  for (const auto& m : sample_models()) {
    const int d = m.dimension();
    for (int trial = 0; trial < 500; ++trial) {
      Vec x = rng.box(d, -1.0, 2.0);
      Vec p = rng.direction(d);
      double f = m.eval(x, p);
      CHECK(f >= m.c0() - 1e-12);
      CHECK(f <= 1.0 / m.c0() + 1e-12);
      double fp = m.polar(x, p);
      CHECK(fp >= m.c0() - 1e-12);
      CHECK(fp <= 1.0 / m.c0() + 1e-12);
    }
  }
}

TEST_CASE("polar matches the sampled supremum") {
  oracle::Rng rng(43);
  for (const auto& m : sample_models()) {
    const int d = m.dimension();
    for (int trial = 0; trial < 8; ++trial) {
      Vec x = rng.box(d, 0.0, 1.0);
      Vec z = scaled(rng.direction(d), rng.uniform(0.25, 4.0), d);
      double ref = oracle::polar_by_sampling(m, x, z);
      CHECK(m.polar(x, z) == doctest::Approx(ref).epsilon(1e-7));
    }
  }
}

TEST_CASE("bipolar recovers the norm") {
  oracle::Rng rng(44);
  for (const auto& m : sample_models()) {
    const int d = m.dimension();
    for (int trial = 0; trial < 8; ++trial) {
      Vec x = rng.box(d, 0.0, 1.0);
      Vec p = scaled(rng.direction(d), rng.uniform(0.25, 4.0), d);
      double ref = oracle::polar_by_sampling(m, x, p, /*of_polar=*/true);
      CHECK(m.eval(x, p) == doctest::Approx(ref).epsilon(1e-7));
    }
  }
}

TEST_CASE("gradients match central differences") {
  oracle::Rng rng(45);
  for (const auto& m : sample_models()) {
    const int d = m.dimension();
    for (int trial = 0; trial < 50; ++trial) {
      Vec x = rng.box(d, 0.0, 1.0);
      Vec p = scaled(rng.direction(d), rng.uniform(0.5, 2.0), d);
      Vec g = m.grad(x, p), gf = oracle::fd_grad(m, x, p);
      Vec pg = m.polar_grad(x, p), pgf = oracle::fd_polar_grad(m, x, p);
      for (int i = 0; i < d; ++i) {
        CHECK(g[i] == doctest::Approx(gf[i]).epsilon(1e-6).scale(1.0));
        CHECK(pg[i] == doctest::Approx(pgf[i]).epsilon(1e-6).scale(1.0));
      }
    }
  }
}

TEST_CASE("gradient maximizes pairing over the unit ball") {
  // grad F(x,p) is the point of {F°(x,.) <= 1} where p is the outer normal:
  // F°(grad) = 1 and grad.p = F(p) >= z.p for every feasible z
  oracle::Rng rng(46);
  for (const auto& m : sample_models()) {
    const int d = m.dimension();
    for (int trial = 0; trial < 100; ++trial) {
      Vec x = rng.box(d, 0.0, 1.0);
      Vec p = rng.direction(d);
      Vec g = m.grad(x, p);
      CHECK(m.polar(x, g) == doctest::Approx(1.0).epsilon(1e-12));
      Vec z = m.radial_project(x, rng.gauss_vec(d));
      CHECK(dot(z, p, d) <= m.eval(x, p) + 1e-12);
    }
  }
}

TEST_CASE("quadratic convexity residuals are nonnegative") {
  oracle::Rng rng(47);
  for (const auto& m : sample_models()) {
    const int d = m.dimension();
    for (int trial = 0; trial < 300; ++trial) {
      Vec x = rng.box(d, 0.0, 1.0);
      Vec y = scaled(rng.gauss_vec(d), rng.uniform(0.0, 3.0), d);
      Vec z = scaled(rng.gauss_vec(d), rng.uniform(0.0, 3.0), d);
      CHECK(m.convexity_residual(x, y, z) >= -1e-10);
      CHECK(m.polar_convexity_residual(x, y, z) >= -1e-10);
    }
    // z = 0 reduces to F^2(y) - delta^2 |y|^2
    Vec x{0.25, 0.5, 0.125}, y{0.3, -1.2, d == 3 ? 0.4 : 0.0};
    double fy = m.eval(x, y);
    CHECK(m.convexity_residual(x, y, {0, 0, 0}) ==
          doctest::Approx(fy * fy - m.delta() * m.delta() * dot(y, y, d)).epsilon(1e-12));
  }
}

TEST_CASE("radial feasibility projection") {
  oracle::Rng rng(48);
  for (const auto& m : sample_models()) {
    const int d = m.dimension();
    for (int trial = 0; trial < 100; ++trial) {
      Vec x = rng.box(d, 0.0, 1.0);
      Vec z = scaled(rng.gauss_vec(d), rng.uniform(0.0, 5.0), d);
      Vec pr = m.radial_project(x, z);
      CHECK(m.polar(x, pr) <= 1.0 + 1e-12);
      if (m.polar(x, z) <= 1.0)
        for (int i = 0; i < d; ++i) CHECK(pr[i] == z[i]);
      // projecting twice changes nothing
      Vec pr2 = m.radial_project(x, pr);
      for (int i = 0; i < d; ++i) CHECK(pr2[i] == doctest::Approx(pr[i]).epsilon(1e-14));
    }
  }
}

TEST_CASE("euclidean projection onto the dual ball") {
  oracle::Rng rng(49);
  for (const auto& m : sample_models()) {
    const int d = m.dimension();
    for (int trial = 0; trial < 60; ++trial) {
      Vec x = rng.box(d, 0.0, 1.0);
      Vec w = scaled(rng.gauss_vec(d), rng.uniform(0.0, 5.0), d);
      Vec p = m.euclidean_project(x, w);
      CHECK(m.polar(x, p) <= 1.0 + 1e-10);
      if (m.polar(x, w) <= 1.0) {
        for (int i = 0; i < d; ++i) CHECK(p[i] == w[i]);
        continue;
      }
      CHECK(m.polar(x, p) == doctest::Approx(1.0).epsilon(1e-9));
      // no sampled feasible point may be closer to w
      double best = dist(w, p, d);
      for (int probe = 0; probe < 400; ++probe) {
        Vec q = m.radial_project(x, scaled(rng.gauss_vec(d), rng.uniform(0.0, 3.0), d));
        CHECK(dist(w, q, d) >= best - 1e-9);
      }
      // KKT: w - p is parallel to the constraint gradient at p
      Vec dir = sub(w, p, d);
      Vec cg = m.polar_grad(x, p);
      double cosang = dot(dir, cg, d) / (norm(dir, d) * norm(cg, d));
      CHECK(cosang == doctest::Approx(1.0).epsilon(1e-8));
    }
  }
  // euclidean case degenerates to radial scaling
  auto m = AnisotropyModel::euclidean(2);
  Vec x{0, 0, 0}, w{3, 4, 0};
  Vec p = m.euclidean_project(x, w), r = m.radial_project(x, w);
  for (int i = 0; i < 2; ++i) CHECK(p[i] == doctest::Approx(r[i]).epsilon(1e-15));
}

TEST_CASE("spatial weight stays inside its advertised range") {
  oracle::Rng rng(50);
  for (const auto& m : sample_models()) {
    const int d = m.dimension();
    double wmin = 1e300, wmax = -1e300;
    for (int trial = 0; trial < 2000; ++trial) {
      double w = m.weight(rng.box(d, -2.0, 2.0));
      wmin = std::min(wmin, w);
      wmax = std::max(wmax, w);
    }
    CHECK(wmin > 0.0);
    if (m.kind() == AnisotropyKind::Euclidean) {
      CHECK(wmin == 1.0);
      CHECK(wmax == 1.0);
    }
  }
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(AnisotropyModel::euclidean(4), invalid_input_error);
  CHECK_THROWS_AS(AnisotropyModel::weighted_euclidean(2, 1.0, 1.0), invalid_input_error);
  CHECK_THROWS_AS(AnisotropyModel::weighted_euclidean(2, 0.5, -0.1), invalid_input_error);
  std::array<double, 9> nonsym{1, 2, 0, 0, 1, 0, 0, 0, 1};
  CHECK_THROWS_AS(AnisotropyModel::riemannian(2, nonsym, 0.0), invalid_input_error);
  std::array<double, 9> indef{1, 0, 0, 0, -1, 0, 0, 0, 1};
  CHECK_THROWS_AS(AnisotropyModel::riemannian(2, indef, 0.0), invalid_input_error);
  std::array<double, 9> id{1, 0, 0, 0, 1, 0, 0, 0, 1};
  CHECK_THROWS_AS(AnisotropyModel::riemannian(2, id, 1.5), invalid_input_error);

  auto m = AnisotropyModel::euclidean(2);
  CHECK_THROWS_AS(m.grad({0, 0, 0}, {0, 0, 0}), degenerate_point_error);
  CHECK_THROWS_AS(m.polar_grad({0, 0, 0}, {0, 0, 0}), degenerate_point_error);
  double nan = std::nan("");
  CHECK_THROWS_AS(m.eval({nan, 0, 0}, {1, 0, 0}), invalid_input_error);
  CHECK_THROWS_AS(m.eval({0, 0, 0}, {nan, 0, 0}), invalid_input_error);
  CHECK(m.describe().size() > 0);
}
