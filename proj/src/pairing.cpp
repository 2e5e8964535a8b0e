#include "atv/pairing.hpp"

#include <cmath>

namespace atv {

double pairing_apply(const VectorField& z, const ScalarField& u, const ScalarField& psi) {
  const GridSpec& g = u.grid;
  if (!g.congruent(z.grid) || !g.congruent(psi.grid))
    throw invalid_input_error("pairing_apply: fields live on different grids");

  // interior support: every face neighbor of a psi-carrying cell is active
  const std::size_t s1 = g.stride(1), s2 = g.stride(2);
  for (int k = 0; k < g.n[2]; ++k)
    for (int j = 0; j < g.n[1]; ++j)
      for (int i = 0; i < g.n[0]; ++i) {
        std::size_t c = g.index(i, j, k);
        if (psi.v[c] == 0.0) continue;
        if (!g.active(c)) throw invalid_input_error("pairing_apply: psi set on inactive cell");
        bool interior = g.active(i - 1, j, k) && g.active(i + 1, j, k) && g.active(i, j - 1, k) &&
                        g.active(i, j + 1, k);
        if (g.dim == 3) interior = interior && g.active(i, j, k - 1) && g.active(i, j, k + 1);
        if (!interior)
          throw invalid_input_error("pairing_apply: psi must be supported in the interior");
      }

  ScalarField dz = divergence(z);
  VectorField gpsi = gradient(psi);
  Accumulator acc;
  for (int k = 0; k < g.n[2]; ++k)
    for (int j = 0; j < g.n[1]; ++j)
      for (int i = 0; i < g.n[0]; ++i) {
        std::size_t c = g.index(i, j, k);
        if (!g.active(c)) continue;
        acc.add(-u.v[c] * psi.v[c] * dz.v[c]);
        if (gpsi.comp[0][c] != 0.0) acc.add(-u.v[c + 1] * z.comp[0][c] * gpsi.comp[0][c]);
        if (gpsi.comp[1][c] != 0.0) acc.add(-u.v[c + s1] * z.comp[1][c] * gpsi.comp[1][c]);
        if (g.dim == 3 && gpsi.comp[2][c] != 0.0)
          acc.add(-u.v[c + s2] * z.comp[2][c] * gpsi.comp[2][c]);
      }
  return acc.value() * g.cell_volume();
}

double normal_trace(const VectorField& z, const LevelSetView& E, const Vec& x, double r,
                    double rho) {
  if (!z.grid.congruent(E.grid))
    throw invalid_input_error("normal_trace: field and level set live on different grids");
  NormalEstimate nu = boundary_normal(E, x, rho);
  if (nu.quality < 0.5)
    throw non_reduced_point_error("normal_trace: normal quality below 0.5 at sample point");
  return cylinder_average(z, x, nu.direction, r, rho);
}

BlowupSeries blowup(const VectorField& z, const Vec& x, std::span<const double> radii) {
  const GridSpec& g = z.grid;
  if (radii.empty()) throw invalid_input_error("blowup: empty radius ladder");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] >= 2.0 * g.h)) throw invalid_input_error("blowup: radii must be >= 2h");
    if (i > 0 && !(radii[i] < radii[i - 1]))
      throw invalid_input_error("blowup: radii must be strictly decreasing");
  }
  BlowupSeries s;
  s.center = x;
  for (double rho : radii) {
    auto cells = cells_in_ball(g, x, rho);
    if (cells.empty()) throw empty_region_error("blowup: ball misses the domain");
    Accumulator mean[3];
    for (auto c : cells)
      for (int i = 0; i < g.dim; ++i) mean[i].add(z.comp[i][c]);
    Vec avg{0, 0, 0};
    for (int i = 0; i < g.dim; ++i) avg[i] = mean[i].value() / static_cast<double>(cells.size());
    Accumulator dev;
    for (auto c : cells) {
      double d2 = 0.0;
      for (int i = 0; i < g.dim; ++i) {
        double d = z.comp[i][c] - avg[i];
        d2 += d * d;
      }
      dev.add(std::sqrt(d2));
    }
    s.radii.push_back(rho);
    s.averages.push_back(avg);
    s.oscillations.push_back(dev.value() / static_cast<double>(cells.size()));
  }
  bool mono = true;
  for (std::size_t i = 1; i < s.oscillations.size(); ++i)
    mono = mono && s.oscillations[i] <= s.oscillations[i - 1] + 1e-12;
  s.lebesgue_like = mono && s.oscillations.back() <= 0.1 * std::max(z.max_norm(), 1e-300);
  return s;
}

NormalLimitCheck normal_limit_check(const VectorField& z, const LevelSetView& E,
                                    const AnisotropyModel& model, const Vec& x,
                                    std::span<const double> radii) {
  if (!z.grid.congruent(E.grid))
    throw invalid_input_error("normal_limit_check: field and level set live on different grids");
  if (model.dimension() != z.grid.dim)
    throw invalid_input_error("normal_limit_check: anisotropy dimension mismatch");
  NormalLimitCheck out;
  NormalEstimate nu = boundary_normal(E, x, radii.empty() ? 0.0 : radii.front());
  if (nu.quality < 0.5)
    throw non_reduced_point_error("normal_limit_check: normal quality below 0.5");
  out.normal = nu.direction;
  out.normal_quality = nu.quality;
  out.reference = model.grad(x, nu.direction);
  out.series = blowup(z, x, radii);
  out.residual = dist(out.series.averages.back(), out.reference, z.grid.dim);
  return out;
}

} // namespace atv
