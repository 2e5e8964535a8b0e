#include "atv/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace atv {

GridSpec GridSpec::box(int dim, std::array<int, 3> n, double h, Vec origin) {
  GridSpec g;
  g.dim = dim;
  g.n = n;
  g.h = h;
  g.origin = origin;
  g.validate();
  return g;
}

GridSpec GridSpec::unit_square(int n) { return box(2, {n, n, 1}, 1.0 / n); }
GridSpec GridSpec::unit_cube(int n) { return box(3, {n, n, n}, 1.0 / n); }

bool GridSpec::congruent(const GridSpec& o) const {
  return dim == o.dim && n == o.n && h == o.h && origin == o.origin && mask == o.mask;
}

void GridSpec::validate() const {
  if (dim != 2 && dim != 3) throw invalid_input_error("grid: dimension must be 2 or 3");
  if (n[0] < 1 || n[1] < 1 || n[2] < 1) throw invalid_input_error("grid: cell counts must be >= 1");
  if (dim == 2 && n[2] != 1) throw invalid_input_error("grid: 2D grid needs n[2] == 1");
  if (!(h > 0.0) || !std::isfinite(h)) throw invalid_input_error("grid: h must be positive");
  if (!finite(origin, 3)) throw invalid_input_error("grid: origin must be finite");
  if (!mask.empty() && mask.size() != cell_count())
    throw invalid_input_error("grid: mask size does not match cell count");
}

ScalarField ScalarField::sample(const GridSpec& g, const std::function<double(const Vec&)>& fn) {
  ScalarField f = zeros(g);
  for (std::size_t c = 0; c < g.cell_count(); ++c)
    if (g.active(c)) f.v[c] = fn(g.cell_center(c));
  return f;
}

ScalarField ScalarField::cell_average(const GridSpec& g, const std::function<double(const Vec&)>& fn,
                                      int nsub) {
  if (nsub < 1) throw invalid_input_error("cell_average: nsub must be >= 1");
  ScalarField f = zeros(g);
  const int nz = g.dim == 3 ? nsub : 1;
  const double w = 1.0 / (static_cast<double>(nsub) * nsub * nz);
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    if (!g.active(c)) continue;
    auto ijk = g.coords(c);
    Vec corner{g.origin[0] + g.h * ijk[0], g.origin[1] + g.h * ijk[1],
               g.dim == 3 ? g.origin[2] + g.h * ijk[2] : 0.0};
    double s = 0.0;
    for (int a = 0; a < nsub; ++a)
      for (int b = 0; b < nsub; ++b)
        for (int d = 0; d < nz; ++d) {
          Vec p{corner[0] + g.h * (a + 0.5) / nsub, corner[1] + g.h * (b + 0.5) / nsub,
                g.dim == 3 ? corner[2] + g.h * (d + 0.5) / nsub : 0.0};
          s += fn(p);
        }
    f.v[c] = s * w;
  }
  return f;
}

double ScalarField::min() const {
  double m = std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t c = 0; c < grid.cell_count(); ++c)
    if (grid.active(c)) {
      m = std::min(m, v[c]);
      any = true;
    }
  if (!any) throw empty_region_error("scalar field: no active cells");
  return m;
}

double ScalarField::max() const {
  double m = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t c = 0; c < grid.cell_count(); ++c)
    if (grid.active(c)) {
      m = std::max(m, v[c]);
      any = true;
    }
  if (!any) throw empty_region_error("scalar field: no active cells");
  return m;
}

VectorField VectorField::zeros(const GridSpec& g) {
  VectorField z;
  z.grid = g;
  for (int i = 0; i < g.dim; ++i) z.comp[i].assign(g.cell_count(), 0.0);
  return z;
}

VectorField VectorField::sample(const GridSpec& g, const std::function<Vec(const Vec&)>& fn,
                                bool staggered) {
  VectorField z = zeros(g);
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    if (!g.active(c)) continue;
    Vec x = g.cell_center(c);
    if (!staggered) {
      Vec val = fn(x);
      for (int i = 0; i < g.dim; ++i) z.comp[i][c] = val[i];
    } else {
      for (int i = 0; i < g.dim; ++i) {
        Vec xf = x;
        xf[i] += 0.5 * g.h;
        z.comp[i][c] = fn(xf)[i];
      }
    }
  }
  return z;
}

double VectorField::max_norm() const {
  double m = 0.0;
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    if (!grid.active(c)) continue;
    double s = 0.0;
    for (int i = 0; i < grid.dim; ++i) s += comp[i][c] * comp[i][c];
    m = std::max(m, s);
  }
  return std::sqrt(m);
}

void gradient_into(const ScalarField& u, VectorField& z) {
  const GridSpec& g = u.grid;
  if (!g.congruent(z.grid)) throw invalid_input_error("gradient_into: grid mismatch");
  const double inv_h = 1.0 / g.h;
  for (int a = 0; a < 3; ++a) std::fill(z.comp[a].begin(), z.comp[a].end(), 0.0);
  for (int k = 0; k < g.n[2]; ++k)
    for (int j = 0; j < g.n[1]; ++j)
      for (int i = 0; i < g.n[0]; ++i) {
        std::size_t c = g.index(i, j, k);
        if (!g.active(c)) continue;
        if (i + 1 < g.n[0] && g.active(c + 1)) z.comp[0][c] = (u.v[c + 1] - u.v[c]) * inv_h;
        if (j + 1 < g.n[1] && g.active(c + g.stride(1)))
          z.comp[1][c] = (u.v[c + g.stride(1)] - u.v[c]) * inv_h;
        if (g.dim == 3 && k + 1 < g.n[2] && g.active(c + g.stride(2)))
          z.comp[2][c] = (u.v[c + g.stride(2)] - u.v[c]) * inv_h;
      }
}

VectorField gradient(const ScalarField& u) {
  VectorField z = VectorField::zeros(u.grid);
  gradient_into(u, z);
  return z;
}

void divergence_into(const VectorField& z, ScalarField& d) {
  const GridSpec& g = z.grid;
  if (!g.congruent(d.grid)) throw invalid_input_error("divergence_into: grid mismatch");
  const double inv_h = 1.0 / g.h;
  const std::size_t s1 = g.stride(1), s2 = g.stride(2);
  for (int k = 0; k < g.n[2]; ++k)
    for (int j = 0; j < g.n[1]; ++j)
      for (int i = 0; i < g.n[0]; ++i) {
        std::size_t c = g.index(i, j, k);
        if (!g.active(c)) continue;
        double s = 0.0;
        if (i + 1 < g.n[0] && g.active(c + 1)) s += z.comp[0][c];
        if (i > 0 && g.active(c - 1)) s -= z.comp[0][c - 1];
        if (j + 1 < g.n[1] && g.active(c + s1)) s += z.comp[1][c];
        if (j > 0 && g.active(c - s1)) s -= z.comp[1][c - s1];
        if (g.dim == 3) {
          if (k + 1 < g.n[2] && g.active(c + s2)) s += z.comp[2][c];
          if (k > 0 && g.active(c - s2)) s -= z.comp[2][c - s2];
        }
        d.v[c] = s * inv_h;
      }
}

ScalarField divergence(const VectorField& z) {
  ScalarField d = ScalarField::zeros(z.grid);
  divergence_into(z, d);
  return d;
}

namespace {

/// Cell-index window covering B_rho(x) along one axis.
std::pair<int, int> axis_window(const GridSpec& g, int axis, double x, double rho) {
  int lo = static_cast<int>(std::floor((x - rho - g.origin[axis]) / g.h - 0.5));
  int hi = static_cast<int>(std::ceil((x + rho - g.origin[axis]) / g.h - 0.5));
  return {std::max(lo, 0), std::min(hi, g.n[axis] - 1)};
}

template <class Visit>
void for_cells_in_ball(const GridSpec& g, const Vec& x, double rho, Visit visit) {
  if (!(rho > 0.0) || !std::isfinite(rho) || !finite(x, g.dim))
    throw invalid_input_error("ball average: need finite center and rho > 0");
  auto [i0, i1] = axis_window(g, 0, x[0], rho);
  auto [j0, j1] = axis_window(g, 1, x[1], rho);
  int k0 = 0, k1 = 0;
  if (g.dim == 3) std::tie(k0, k1) = axis_window(g, 2, x[2], rho);
  const double r2 = rho * rho;
  for (int k = k0; k <= k1; ++k)
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) {
        std::size_t c = g.index(i, j, k);
        if (!g.active(c)) continue;
        Vec p = g.cell_center(i, j, k);
        double d2 = 0.0;
        for (int a = 0; a < g.dim; ++a) d2 += (p[a] - x[a]) * (p[a] - x[a]);
        if (d2 <= r2) visit(c);
      }
}

} // namespace

std::vector<std::size_t> cells_in_ball(const GridSpec& g, const Vec& x, double rho) {
  std::vector<std::size_t> out;
  for_cells_in_ball(g, x, rho, [&](std::size_t c) { out.push_back(c); });
  return out;
}

double ball_average(const ScalarField& u, const Vec& x, double rho) {
  Accumulator acc;
  std::size_t count = 0;
  for_cells_in_ball(u.grid, x, rho, [&](std::size_t c) {
    acc.add(u.v[c]);
    ++count;
  });
  if (count == 0) throw empty_region_error("ball average: no active cells in ball");
  return acc.value() / static_cast<double>(count);
}

Vec ball_average(const VectorField& z, const Vec& x, double rho) {
  Accumulator acc[3];
  std::size_t count = 0;
  for_cells_in_ball(z.grid, x, rho, [&](std::size_t c) {
    for (int i = 0; i < z.grid.dim; ++i) acc[i].add(z.comp[i][c]);
    ++count;
  });
  if (count == 0) throw empty_region_error("ball average: no active cells in ball");
  Vec r{0, 0, 0};
  for (int i = 0; i < z.grid.dim; ++i) r[i] = acc[i].value() / static_cast<double>(count);
  return r;
}

double cylinder_average(const VectorField& z, const Vec& x, const Vec& axis, double r, double rho) {
  const GridSpec& g = z.grid;
  if (!(r > 0.0) || !(rho > 0.0) || !std::isfinite(r) || !std::isfinite(rho))
    throw invalid_input_error("cylinder average: need r > 0 and rho > 0");
  double an = norm(axis, g.dim);
  if (!(an > 0.0) || !finite(axis, g.dim))
    throw invalid_input_error("cylinder average: axis must be finite and nonzero");
  Vec a = scaled(axis, 1.0 / an, g.dim);
  double reach = std::sqrt(r * r + rho * rho);
  Accumulator acc;
  std::size_t count = 0;
  for_cells_in_ball(g, x, reach, [&](std::size_t c) {
    Vec d = sub(g.cell_center(c), x, g.dim);
    double t = dot(d, a, g.dim);
    if (std::abs(t) >= r) return;
    double p2 = dot(d, d, g.dim) - t * t;
    if (p2 >= rho * rho) return;
    double zn = 0.0;
    for (int i = 0; i < g.dim; ++i) zn += z.comp[i][c] * a[i];
    acc.add(zn);
    ++count;
  });
  if (count == 0) throw empty_region_error("cylinder average: no active cells in cylinder");
  return acc.value() / static_cast<double>(count);
}

} // namespace atv
