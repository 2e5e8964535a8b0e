#pragma once

#include <vector>

#include "atv/grid.hpp"
#include "atv/vec.hpp"

namespace atv {

/// An explicit vector field on the unit ball whose ball averages at the
/// origin oscillate forever, even though its divergence has finite L^p norm
/// for every p below the dimension.
///
/// Construction: unit field e_d everywhere, except inside a chain of disjoint
/// balls B_n = B(2 r_n e_d, r_n) stacked above the origin, where the e_d
/// component dips linearly to 0 at the center, z = (|x - c_n| / r_n) e_d.
/// The field calibrates the lower half-ball {x_d <= 0} (it equals the unit
/// inward normal e_d on the whole interface, which no ball touches), its
/// divergence is (x_d - c_{n,d}) / (r_n |x - c_n|) inside B_n and 0 outside,
/// so |div| <= 1/r_n on a set of volume ~ r_n^d and the L^{d-eps} mass of
/// ball n is bounded by omega_d r_n^eps. Yet averages of z . e_d over
/// B(0, 3 r_n) stay below 1 - 1/6^d (the dip in B_n occupies a fixed volume
/// fraction) while averages over B(0, r_n) exceed 1 - delta (only the deeper,
/// vanishing balls intrude), so the averages cannot converge: refining the
/// radius forever alternates between the two regimes.
struct NestedBallField {
  int dim = 2;            ///< 2 or 3
  double epsilon = 0.5;   ///< divergence integrability margin, in (0,1)
  double delta = 0.01;    ///< tail-volume budget, in (0, 1/6^dim)
  /// Materialized ball radii, strictly decreasing with r_{n+1} < r_n / 4
  /// (disjointness) and sum_{i>n} r_i^dim <= delta r_n^dim (tail budget).
  std::vector<double> radii;

  /// The doubly-exponential sequence 2^{-2^n}, n = 2..6, with the tail
  /// budget 0.01 in 2D and 0.001 in 3D (both verified at construction).
  static NestedBallField standard(int dim);

  int depth() const { return static_cast<int>(radii.size()); }
  Vec center(int n) const;  ///< c_n = 2 r_n e_d, n is 1-based

  /// Throws invalid_input_error when any structural invariant fails
  /// (dimension, parameter ranges, decay rate, disjointness, tail budget,
  /// outermost ball escaping the unit ball).
  void validate() const;

  /// Field value. Throws invalid_input_error outside the closed unit ball.
  Vec value(const Vec& x) const;
  /// Analytic divergence: 0 outside the balls, (x_d - c_d)/(r_n |x - c_n|)
  /// inside ball n. Same domain check as value().
  double divergence(const Vec& x) const;

  /// Mean of z . e_d over B(0, 3 r_n) intersected with the unit ball,
  /// midpoint product quadrature with ~nodes evaluation points; n is
  /// 1-based. Analytically <= 1 - 1/6^dim.
  double large_ball_average(int n, int nodes = 10000) const;
  /// Mean of z . e_d over B(0, r_n): analytically >= 1 - delta, since only
  /// balls deeper than n intersect. Requires n < depth() so that the value
  /// reflects the tail (the deepest materialized radius has an empty tail
  /// and averages to exactly 1).
  double small_ball_average(int n, int nodes = 10000) const;

  /// Truncated integral of |div z|^p over the materialized balls by per-ball
  /// product quadrature. Bounded by omega_d sum r_n^{dim - p} when p < dim;
  /// at p = dim each ball contributes the same amount (the truncated value
  /// grows linearly with depth - the divergence just fails to lie in L^dim),
  /// which p_at_integrability_edge reports.
  struct DivNorm {
    double value = 0.0;
    double exponent = 0.0;
    bool p_at_integrability_edge = false;  ///< p >= dim: truncation-only value
  };
  DivNorm div_lp_norm(double p, int nodes_per_ball = 10000) const;

  /// Sample the field on a grid (staggered components, inactive cells 0);
  /// the formula extends by e_d outside the unit ball, so staggered points
  /// slightly past the rim are fine.
  VectorField rasterize(const GridSpec& grid) const;
};

/// Both average sequences plus the witness that they cannot share a limit:
/// the best small-ball average exceeds the worst large-ball average by at
/// least 1/6^dim - delta - 2e-3 (quadrature slack folded in). Requires
/// depth >= 3; throws invalid_input_error when the separation fails, since
/// that means the radius sequence violates its tail budget.
struct OscillationReport {
  std::vector<double> large_ball;   ///< n = 1..N, bound below 1 - 1/6^dim
  std::vector<double> small_ball;   ///< n = 1..N-1, bound above 1 - delta
  double large_bound = 0.0;         ///< 1 - 1/6^dim + 1e-3
  double small_bound = 0.0;         ///< 1 - delta - 1e-3
  double gap = 0.0;                 ///< max small_ball - min large_ball
  double gap_lower_bound = 0.0;     ///< 1/6^dim - delta - 2e-3
  bool averages_oscillate = false;  ///< gap >= gap_lower_bound
};
OscillationReport oscillation_report(const NestedBallField& field, int nodes = 10000);

} // namespace atv
