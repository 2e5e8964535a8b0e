#pragma once

#include <span>
#include <vector>

#include "atv/anisotropy.hpp"
#include "atv/geometry.hpp"
#include "atv/grid.hpp"

namespace atv {

/// Weak pairing <[z, Du], psi> = -sum u psi div z h^d - sum u(c+e_i) z_i(c)
/// grad psi_i(c) h^d. For interior-supported psi this telescopes exactly to
/// sum psi z.grad u h^d (discrete product rule), which is what makes it the
/// discrete analogue of the measure pairing. psi must vanish on any cell
/// whose full face neighborhood leaves the active region.
double pairing_apply(const VectorField& z, const ScalarField& u, const ScalarField& psi);

/// Mean of z . nu over the cylinder {|(xi-x).nu| < r, |perp| < rho} with nu
/// the estimated inward boundary normal at x. Throws non_reduced_point_error
/// when the normal estimate has quality < 0.5.
double normal_trace(const VectorField& z, const LevelSetView& E, const Vec& x, double r,
                    double rho);

/// Ball averages of z around x across a decreasing radius ladder, with the
/// mean absolute deviation at each radius. lebesgue_like records whether the
/// oscillations decrease monotonically and end below 0.1 * max|z|.
struct BlowupSeries {
  Vec center{0, 0, 0};
  std::vector<double> radii;
  std::vector<Vec> averages;
  std::vector<double> oscillations;
  bool lebesgue_like = false;
};
BlowupSeries blowup(const VectorField& z, const Vec& x, std::span<const double> radii);

/// Compares the finest-scale ball average of z at a boundary point against
/// grad_p F(x, nu) with nu the estimated inward normal: the structural limit
/// of a calibration along the reduced boundary.
struct NormalLimitCheck {
  double residual = 0.0;  // |z_avg(smallest rho) - grad_p F(x, nu)|
  Vec reference{0, 0, 0};
  Vec normal{0, 0, 0};
  double normal_quality = 0.0;
  BlowupSeries series;
};
NormalLimitCheck normal_limit_check(const VectorField& z, const LevelSetView& E,
                                    const AnisotropyModel& model, const Vec& x,
                                    std::span<const double> radii);

} // namespace atv
