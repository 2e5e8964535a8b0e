#pragma once

#include <span>
#include <vector>

#include "atv/anisotropy.hpp"
#include "atv/grid.hpp"

namespace atv {

/// Upper level set E = {u > s} (or {u >= s}) of a cell field, with its
/// oriented boundary faces. A face sits between two active cells that
/// disagree about membership; dir = +1 means membership increases along
/// +axis, so the inward normal contribution is +e_axis.
struct LevelSetView {
  GridSpec grid;
  std::vector<std::uint8_t> member;
  double threshold = 0.0;
  bool strict = true;

  struct Face {
    std::size_t cell;  // lower cell of the pair (face between cell and cell+e_axis)
    int axis;
    int dir;
  };
  std::vector<Face> faces;
  std::vector<std::size_t> boundary_cells;  // member cells adjacent to a face

  bool contains(std::size_t idx) const { return member[idx] != 0; }
  Vec face_center(const Face& f) const {
    Vec p = grid.cell_center(f.cell);
    p[f.axis] += 0.5 * grid.h;
    return p;
  }
};

LevelSetView upper_level_set(const ScalarField& u, double threshold, bool strict = true);

/// |E ∩ B_rho(x)| / |Omega ∩ B_rho(x)| by cell counting.
double density_ratio(const LevelSetView& E, const Vec& x, double rho);

/// Face-averaged inward normal over B_rho(x). quality = |resultant| / #faces
/// in [0,1]; below 0.5 the direction is unreliable (non-reduced point).
struct NormalEstimate {
  Vec direction;  // unit
  double quality;
  std::size_t face_count;
};
NormalEstimate boundary_normal(const LevelSetView& E, const Vec& x, double rho);

/// Anisotropic perimeter as the TV energy of the indicator field, so that
/// the coarea identity is exact for binary fields by construction.
double perimeter(const LevelSetView& E, const AnisotropyModel& model);

/// Relative defect of the coarea identity: the threshold-midpoint ladder sum
/// of level-set perimeters against tv_energy(u). 0 for constant u.
double coarea_defect(const ScalarField& u, const AnisotropyModel& model, int thresholds);

/// min over rho of rho^(1-d) * integral of |grad u| over B_rho(x); positive
/// values flag jump-set points. radii must be strictly decreasing, >= 2h.
double theta_indicator(const ScalarField& u, const Vec& x, std::span<const double> radii);

/// Up to count face centers spread deterministically along the boundary
/// (angle-sorted around the set centroid in 2D, index-sorted in 3D).
std::vector<Vec> boundary_sample_points(const LevelSetView& E, int count);

} // namespace atv
