#include "atv/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "atv/energy.hpp"

namespace atv {

LevelSetView upper_level_set(const ScalarField& u, double threshold, bool strict) {
  if (!std::isfinite(threshold)) throw invalid_input_error("upper_level_set: threshold not finite");
  const GridSpec& g = u.grid;
  LevelSetView E;
  E.grid = g;
  E.threshold = threshold;
  E.strict = strict;
  E.member.assign(g.cell_count(), 0);
  for (std::size_t c = 0; c < g.cell_count(); ++c)
    if (g.active(c)) E.member[c] = (strict ? u.v[c] > threshold : u.v[c] >= threshold) ? 1 : 0;

  std::vector<std::uint8_t> on_boundary(g.cell_count(), 0);
  const std::size_t s1 = g.stride(1), s2 = g.stride(2);
  for (int k = 0; k < g.n[2]; ++k)
    for (int j = 0; j < g.n[1]; ++j)
      for (int i = 0; i < g.n[0]; ++i) {
        std::size_t c = g.index(i, j, k);
        if (!g.active(c)) continue;
        auto try_face = [&](int axis, bool ok, std::size_t nb) {
          if (!ok || !g.active(nb)) return;
          int d = static_cast<int>(E.member[nb]) - static_cast<int>(E.member[c]);
          if (d == 0) return;
          E.faces.push_back({c, axis, d});
          on_boundary[d > 0 ? nb : c] = 1;
        };
        try_face(0, i + 1 < g.n[0], c + 1);
        try_face(1, j + 1 < g.n[1], c + s1);
        if (g.dim == 3) try_face(2, k + 1 < g.n[2], c + s2);
      }
  for (std::size_t c = 0; c < g.cell_count(); ++c)
    if (on_boundary[c]) E.boundary_cells.push_back(c);
  return E;
}

double density_ratio(const LevelSetView& E, const Vec& x, double rho) {
  auto cells = cells_in_ball(E.grid, x, rho);
  if (cells.empty()) throw empty_region_error("density_ratio: ball misses the domain");
  std::size_t in = 0;
  for (auto c : cells) in += E.member[c];
  return static_cast<double>(in) / static_cast<double>(cells.size());
}

NormalEstimate boundary_normal(const LevelSetView& E, const Vec& x, double rho) {
  if (!(rho > 0.0) || !std::isfinite(rho) || !finite(x, E.grid.dim))
    throw invalid_input_error("boundary_normal: need finite center and rho > 0");
  const double r2 = rho * rho;
  Vec sum{0, 0, 0};
  std::size_t count = 0;
  for (const auto& f : E.faces) {
    Vec p = E.face_center(f);
    double d2 = 0.0;
    for (int a = 0; a < E.grid.dim; ++a) d2 += (p[a] - x[a]) * (p[a] - x[a]);
    if (d2 > r2) continue;
    sum[f.axis] += f.dir;
    ++count;
  }
  if (count == 0) throw empty_region_error("boundary_normal: no boundary faces in ball");
  double len = norm(sum, E.grid.dim);
  NormalEstimate est;
  est.quality = len / static_cast<double>(count);
  est.face_count = count;
  if (len <= 1e-12 * static_cast<double>(count))
    throw non_reduced_point_error("boundary_normal: cancelling faces, direction undefined");
  est.direction = scaled(sum, 1.0 / len, E.grid.dim);
  return est;
}

double perimeter(const LevelSetView& E, const AnisotropyModel& model) {
  ScalarField chi{E.grid, std::vector<double>(E.member.begin(), E.member.end())};
  return tv_energy(chi, model);
}

double coarea_defect(const ScalarField& u, const AnisotropyModel& model, int thresholds) {
  if (thresholds < 1) throw invalid_input_error("coarea_defect: need >= 1 thresholds");
  double lo = u.min(), hi = u.max();
  double scale = std::max({std::abs(lo), std::abs(hi), 1.0});
  if (hi - lo <= 1e-14 * scale) return 0.0;
  double step = (hi - lo) / thresholds;
  Accumulator acc;
  for (int k = 0; k < thresholds; ++k) {
    double s = lo + (k + 0.5) * step;
    acc.add(perimeter(upper_level_set(u, s, true), model));
  }
  double ladder = acc.value() * step;
  double tv = tv_energy(u, model);
  return std::abs(ladder - tv) / std::max(tv, 1e-300);
}

double theta_indicator(const ScalarField& u, const Vec& x, std::span<const double> radii) {
  const GridSpec& g = u.grid;
  if (radii.empty()) throw invalid_input_error("theta_indicator: empty radii");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] >= 2.0 * g.h))
      throw invalid_input_error("theta_indicator: radii must be >= 2h");
    if (i > 0 && !(radii[i] < radii[i - 1]))
      throw invalid_input_error("theta_indicator: radii must be strictly decreasing");
  }
  VectorField gr = gradient(u);
  double best = std::numeric_limits<double>::infinity();
  for (double rho : radii) {
    auto cells = cells_in_ball(g, x, rho);
    if (cells.empty()) throw empty_region_error("theta_indicator: ball misses the domain");
    Accumulator acc;
    for (auto c : cells) {
      double s = 0.0;
      for (int i = 0; i < g.dim; ++i) s += gr.comp[i][c] * gr.comp[i][c];
      acc.add(std::sqrt(s));
    }
    double val = std::pow(rho, 1 - g.dim) * acc.value() * g.cell_volume();
    best = std::min(best, val);
  }
  return best;
}

std::vector<Vec> boundary_sample_points(const LevelSetView& E, int count) {
  if (count < 1) throw invalid_input_error("boundary_sample_points: count must be >= 1");
  if (E.faces.empty()) return {};
  const int dim = E.grid.dim;

  std::vector<Vec> centers(E.faces.size());
  for (std::size_t i = 0; i < E.faces.size(); ++i) centers[i] = E.face_center(E.faces[i]);

  if (dim == 2) {
    Vec centroid{0, 0, 0};
    std::size_t n = 0;
    for (std::size_t c = 0; c < E.grid.cell_count(); ++c)
      if (E.member[c]) {
        centroid = add(centroid, E.grid.cell_center(c), 2);
        ++n;
      }
    if (n == 0) {  // fall back to the face cloud itself
      for (const auto& p : centers) centroid = add(centroid, p, 2);
      n = centers.size();
    }
    centroid = scaled(centroid, 1.0 / static_cast<double>(n), 2);
    std::sort(centers.begin(), centers.end(), [&](const Vec& a, const Vec& b) {
      return std::atan2(a[1] - centroid[1], a[0] - centroid[0]) <
             std::atan2(b[1] - centroid[1], b[0] - centroid[0]);
    });
  }
  // 3D keeps scanline order, already deterministic

  std::vector<Vec> out;
  std::size_t m = centers.size();
  std::size_t take = std::min<std::size_t>(count, m);
  for (std::size_t i = 0; i < take; ++i) out.push_back(centers[(i * m) / take]);
  return out;
}

} // namespace atv
