#include "atv/nested_ball_field.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "atv/errors.hpp"

namespace atv {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require(bool ok, const std::string& what) {
  if (!ok) throw invalid_input_error("nested ball field: " + what);
}

/// Inner dip of the e_d component relative to the surrounding unit field:
/// ball index containing x, or -1. Balls are disjoint, so the first hit wins.
int ball_containing(const NestedBallField& f, const Vec& x) {
  for (int n = 0; n < f.depth(); ++n) {
    double r = f.radii[static_cast<std::size_t>(n)];
    Vec c{0, 0, 0};
    c[f.dim - 1] = 2.0 * r;
    if (dist(x, c, f.dim) <= r) return n;
  }
  return -1;
}

Vec value_unchecked(const NestedBallField& f, const Vec& x) {
  Vec z{0, 0, 0};
  int n = ball_containing(f, x);
  if (n < 0) {
    z[f.dim - 1] = 1.0;
    return z;
  }
  double r = f.radii[static_cast<std::size_t>(n)];
  Vec c{0, 0, 0};
  c[f.dim - 1] = 2.0 * r;
  z[f.dim - 1] = dist(x, c, f.dim) / r;
  return z;
}

void check_domain(const NestedBallField& f, const Vec& x) {
  if (!finite(x, f.dim) || norm(x, f.dim) > 1.0)
    throw invalid_input_error("nested ball field: point outside the closed unit ball");
}

/// Mean of z . e_d over B(0, R) within the unit ball, by a midpoint product
/// grid in polar (2D) / spherical (3D) coordinates. The integrand is
/// continuous (the dips match the unit field at every ball boundary), so the
/// midpoint rule converges cleanly; using the same weight sum in the
/// denominator makes the mean of the constant-1 region exact.
double origin_ball_mean(const NestedBallField& f, double R, int nodes) {
  require(R > 0.0 && std::isfinite(R), "averaging radius must be positive");
  require(nodes >= 64, "quadrature needs at least 64 nodes");
  Accumulator num, den;
  if (f.dim == 2) {
    int nr = std::max(8, static_cast<int>(std::sqrt(nodes / 2.0)));
    int na = 2 * nr;
    double ds = R / nr, da = 2.0 * kPi / na;
    for (int i = 0; i < nr; ++i) {
      double s = (i + 0.5) * ds;
      double w0 = s * ds * da;
      for (int j = 0; j < na; ++j) {
        double a = (j + 0.5) * da;
        Vec x{s * std::sin(a), s * std::cos(a), 0.0};
        if (norm(x, 2) > 1.0) continue;
        num.add(w0 * value_unchecked(f, x)[1]);
        den.add(w0);
      }
    }
  } else {
    int nt = std::max(6, static_cast<int>(std::cbrt(nodes / 2.0)));
    int ns = nt, np = 2 * nt;
    double ds = R / ns, dt = kPi / nt, dp = 2.0 * kPi / np;
    for (int i = 0; i < ns; ++i) {
      double s = (i + 0.5) * ds;
      for (int j = 0; j < nt; ++j) {
        double t = (j + 0.5) * dt;
        double w0 = s * s * std::sin(t) * ds * dt * dp;
        for (int k = 0; k < np; ++k) {
          double p = (k + 0.5) * dp;
          Vec x{s * std::sin(t) * std::cos(p), s * std::sin(t) * std::sin(p),
                s * std::cos(t)};
          if (norm(x, 3) > 1.0) continue;
          num.add(w0 * value_unchecked(f, x)[2]);
          den.add(w0);
        }
      }
    }
  }
  if (!(den.value() > 0.0))
    throw empty_region_error("nested ball field: averaging ball left the domain");
  return num.value() / den.value();
}

} // namespace

NestedBallField NestedBallField::standard(int dim) {
  NestedBallField f;
  f.dim = dim;
  f.epsilon = 0.5;
  f.delta = dim == 3 ? 1e-3 : 1e-2;
  for (int n = 2; n <= 6; ++n) f.radii.push_back(std::exp2(-std::exp2(double(n))));
  f.validate();
  return f;
}

Vec NestedBallField::center(int n) const {
  require(n >= 1 && n <= depth(), "ball index out of range");
  Vec c{0, 0, 0};
  c[dim - 1] = 2.0 * radii[static_cast<std::size_t>(n - 1)];
  return c;
}

void NestedBallField::validate() const {
  require(dim == 2 || dim == 3, "dimension must be 2 or 3");
  require(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0,1)");
  double cap = 1.0 / std::pow(6.0, dim);
  require(delta > 0.0 && delta < cap, "delta must lie in (0, 1/6^dim)");
  for (double r : radii) require(std::isfinite(r) && r > 0.0, "radii must be positive");
  for (std::size_t i = 0; i + 1 < radii.size(); ++i)
    require(radii[i + 1] < radii[i] / 4.0, "radii must decay faster than 1/4 per step");
  if (!radii.empty())
    require(3.0 * radii.front() <= 1.0,
            "outermost ball structure must fit inside the unit ball (3 r_1 <= 1)");
  // pairwise disjointness, directly from centers and radii
  for (std::size_t i = 0; i < radii.size(); ++i)
    for (std::size_t j = i + 1; j < radii.size(); ++j)
      require(2.0 * (radii[i] - radii[j]) > radii[i] + radii[j],
              "balls must be pairwise disjoint");
  // tail-volume budget behind every ball (drives the small-ball bound)
  for (std::size_t n = 0; n < radii.size(); ++n) {
    Accumulator tail;
    for (std::size_t i = n + 1; i < radii.size(); ++i)
      tail.add(std::pow(radii[i], dim));
    require(tail.value() <= delta * std::pow(radii[n], dim),
            "tail volumes exceed the delta budget");
  }
}

Vec NestedBallField::value(const Vec& x) const {
  check_domain(*this, x);
  return value_unchecked(*this, x);
}

double NestedBallField::divergence(const Vec& x) const {
  check_domain(*this, x);
  int n = ball_containing(*this, x);
  if (n < 0) return 0.0;
  double r = radii[static_cast<std::size_t>(n)];
  Vec c{0, 0, 0};
  c[dim - 1] = 2.0 * r;
  double s = dist(x, c, dim);
  if (s == 0.0) return 0.0;  // removable ambiguity at the center, measure zero
  return (x[dim - 1] - c[dim - 1]) / (s * r);
}

double NestedBallField::large_ball_average(int n, int nodes) const {
  validate();
  require(n >= 1 && n <= depth(), "ball index out of range");
  return origin_ball_mean(*this, 3.0 * radii[static_cast<std::size_t>(n - 1)], nodes);
}

double NestedBallField::small_ball_average(int n, int nodes) const {
  validate();
  require(n >= 1 && n < depth(),
          "small-ball average needs a deeper ball below the index");
  return origin_ball_mean(*this, radii[static_cast<std::size_t>(n - 1)], nodes);
}

NestedBallField::DivNorm NestedBallField::div_lp_norm(double p, int nodes_per_ball) const {
  validate();
  require(std::isfinite(p) && p > 0.0, "exponent must be positive");
  require(nodes_per_ball >= 64, "quadrature needs at least 64 nodes per ball");
  DivNorm out;
  out.exponent = p;
  out.p_at_integrability_edge = p >= double(dim);
  Accumulator total;
  for (int n = 1; n <= depth(); ++n) {
    double r = radii[static_cast<std::size_t>(n - 1)];
    Vec c = center(n);
    Accumulator ball;
    if (dim == 2) {
      int nr = std::max(8, static_cast<int>(std::sqrt(nodes_per_ball / 2.0)));
      int na = 2 * nr;
      double ds = r / nr, da = 2.0 * kPi / na;
      for (int i = 0; i < nr; ++i) {
        double s = (i + 0.5) * ds;
        for (int j = 0; j < na; ++j) {
          double a = (j + 0.5) * da;
          Vec x{c[0] + s * std::sin(a), c[1] + s * std::cos(a), 0.0};
          ball.add(std::pow(std::abs(divergence(x)), p) * s * ds * da);
        }
      }
    } else {
      int nt = std::max(6, static_cast<int>(std::cbrt(nodes_per_ball / 2.0)));
      int ns = nt, np = 2 * nt;
      double ds = r / ns, dt = kPi / nt, dp = 2.0 * kPi / np;
      for (int i = 0; i < ns; ++i) {
        double s = (i + 0.5) * ds;
        for (int j = 0; j < nt; ++j) {
          double t = (j + 0.5) * dt;
          double w0 = s * s * std::sin(t) * ds * dt * dp;
          for (int k = 0; k < np; ++k) {
            double ph = (k + 0.5) * dp;
            Vec x{c[0] + s * std::sin(t) * std::cos(ph),
                  c[1] + s * std::sin(t) * std::sin(ph), c[2] + s * std::cos(t)};
            ball.add(std::pow(std::abs(divergence(x)), p) * w0);
          }
        }
      }
    }
    total.add(ball.value());
  }
  out.value = total.value();
  return out;
}

VectorField NestedBallField::rasterize(const GridSpec& grid) const {
  validate();
  require(grid.dim == dim, "grid dimension must match the field dimension");
  return VectorField::sample(grid, [this](const Vec& x) { return value_unchecked(*this, x); });
}

OscillationReport oscillation_report(const NestedBallField& field, int nodes) {
  field.validate();
  if (field.depth() < 3)
    throw invalid_input_error(
        "nested ball field: oscillation report needs at least 3 materialized balls");
  OscillationReport rep;
  const double pow6 = std::pow(6.0, field.dim);
  rep.large_bound = 1.0 - 1.0 / pow6 + 1e-3;
  rep.small_bound = 1.0 - field.delta - 1e-3;
  rep.gap_lower_bound = 1.0 / pow6 - field.delta - 2e-3;
  for (int n = 1; n <= field.depth(); ++n)
    rep.large_ball.push_back(field.large_ball_average(n, nodes));
  for (int n = 1; n < field.depth(); ++n)
    rep.small_ball.push_back(field.small_ball_average(n, nodes));
  double worst_small = *std::min_element(rep.small_ball.begin(), rep.small_ball.end());
  double best_small = *std::max_element(rep.small_ball.begin(), rep.small_ball.end());
  double worst_large = *std::max_element(rep.large_ball.begin(), rep.large_ball.end());
  rep.gap = best_small - *std::min_element(rep.large_ball.begin(), rep.large_ball.end());
  rep.averages_oscillate = rep.gap >= rep.gap_lower_bound &&
                           worst_large <= rep.large_bound && worst_small >= rep.small_bound;
  if (!rep.averages_oscillate)
    throw invalid_input_error(
        "nested ball field: ball averages failed to separate; the radius sequence "
        "violates its tail budget");
  return rep;
}

} // namespace atv
