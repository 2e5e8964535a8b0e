#pragma once

#include <cstdint>
#include <vector>

#include "atv/anisotropy.hpp"
#include "atv/grid.hpp"

namespace atv {

/// Which variational problem the solver minimizes.
///
/// Rof:                  min_u  sum F(x, grad u) h^d + (lambda/2) sum (u-f)^2 h^d.
///                       The returned g := lambda(f-u) is a subgradient datum of
///                       the total-variation part at the minimizer.
/// PrescribedDivergence: min_u  sum F(x, grad u) h^d - sum g u h^d over cells
///                       that are not clamped, with u held at Dirichlet values
///                       on the clamped cells. Bounded below only when g is
///                       realizable as -div z for a feasible z; a short dual
///                       pre-solve checks this before iterating.
enum class ProblemMode { Rof, PrescribedDivergence };

struct ProblemSpec {
  ProblemMode mode;
  AnisotropyModel model;
  GridSpec grid;

  ScalarField f;         ///< Rof datum (ignored in PrescribedDivergence mode)
  double lambda = 0.0;   ///< Rof fidelity weight, > 0

  ScalarField g;         ///< prescribed divergence datum (PrescribedDivergence)
  ScalarField dirichlet; ///< values held on clamped cells (PrescribedDivergence)
  /// 1 = cell clamped to its dirichlet value; empty = no clamped cells.
  std::vector<std::uint8_t> fixed;

  ProblemSpec(ProblemMode m, AnisotropyModel mod, GridSpec gr);
  static ProblemSpec rof(AnisotropyModel model, ScalarField f, double lambda);
  static ProblemSpec prescribed_divergence(AnisotropyModel model, ScalarField g,
                                           ScalarField dirichlet,
                                           std::vector<std::uint8_t> fixed);
  /// Throws invalid_input_error on shape/parameter violations.
  void validate() const;
};

struct SolveOptions {
  long max_iters = 20000;
  double gap_tol = 1e-5;
  /// Energies/gap are evaluated every check_every iterations (stopping test,
  /// divergence detection, optional history).
  int check_every = 25;
  /// Multiplies the step sizes (the Rof dual gradient step by its square,
  /// the fixed primal/dual steps linearly). 1.0 respects the stability
  /// bounds; larger values deliberately violate them (diagnostic knob for
  /// the divergence-detection path).
  double step_scale = 1.0;
  /// Rof mode only: drive the dual problem with the restarted momentum
  /// scheme and recover u through the exact optimality map (default).
  /// false = plain fixed-step primal-dual iteration, which needs roughly
  /// an order of magnitude more iterations for the same gap.
  bool accelerate = true;
  /// Record (iteration, gap, primal, dual) at every check.
  bool record_history = false;
  /// Dual feasibility pre-solve decision budget (PrescribedDivergence only).
  int presolve_iters = 400;
  /// Pre-solve must reach ||div z + g|| <= presolve_tol * max(||g||, 1) within
  /// presolve_iters iterations, else the energy is reported unbounded below
  /// (invalid_input_error).
  double presolve_tol = 0.05;
  /// Once realizable, the pre-solve keeps polishing the flux down to this
  /// relative residual (budget 50x presolve_iters) so the main iteration
  /// starts essentially feasible.
  double presolve_target = 1e-9;
};

/// One convergence check. gap/primal/dual are certificate values: primal is
/// the best (lowest) primal bound seen so far, dual the best (highest) valid
/// dual bound, gap their normalized difference — so the recorded gap is
/// nonincreasing along the run by construction, and every entry is a true
/// optimality certificate for the iterate snapshot held at that moment.
struct GapSample {
  long iteration;
  double gap;
  double primal;
  double dual;
};

struct SolveResult {
  /// Best primal iterate encountered (checked every check_every iterations).
  ScalarField u;
  /// The dual iterate paired with u, F°(x,z) <= 1 after final projection.
  /// In the default Rof path u is recovered from z through the exact
  /// optimality map u = f + div z / lambda, so g = -div z holds exactly.
  VectorField z;
  /// lambda(f-u) in Rof mode; in PrescribedDivergence mode the input datum on
  /// free cells and the attained -div z on clamped cells.
  ScalarField g;
  double primal_energy = 0.0; ///< primal value of u (the best primal bound)
  /// Rof: best valid dual bound encountered (the final dual iterate attains
  /// it up to restart dips). PrescribedDivergence: primal minus the absolute
  /// pairing residual at the returned pair.
  double dual_energy = 0.0;
  /// Rof: certificate duality gap (primal_energy - dual_energy) /
  /// max(|primal_energy|, |dual_energy|), >= -1e-12 by weak duality.
  /// PrescribedDivergence: relative pairing residual + relative divergence
  /// residual (both vanish at a calibrated optimum).
  double gap = 0.0;
  long iterations = 0;
  std::vector<GapSample> history; ///< filled when record_history is set
};

/// First-order primal-dual iteration with the exact dual-constraint projection
/// as the dual prox. Rof mode exploits the lambda-strong convexity of the data
/// term with the standard variable-step schedule; PrescribedDivergence mode
/// uses fixed steps. Deterministic, serial, reentrant.
///
/// Stops when the relative gap falls below gap_tol or at max_iters (reported
/// in SolveResult::iterations). Throws solver_diverged_error when the primal
/// energy keeps increasing beyond rounding across checks spanning 100+
/// iterations (e.g. step_scale > 1).
SolveResult solve(const ProblemSpec& spec, const SolveOptions& opts = {});
SolveResult solve(const ProblemSpec& spec, long max_iters, double gap_tol);

/// TV energy plus the mode's data term (see ProblemMode).
double primal_energy(const ScalarField& u, const ProblemSpec& spec);

/// Rof: the Fenchel dual objective -sum f (div z) h^d - sum (div z)^2 h^d/(2 lambda),
/// a lower bound on the primal when F°(x,z) <= 1.
/// PrescribedDivergence: the boundary pairing -sum_clamped dirichlet (div z) h^d,
/// which equals the primal value at a calibrated pair when -div z = g holds on
/// the free cells (the divergence residual is reported separately).
double dual_energy(const VectorField& z, const ProblemSpec& spec);

/// Numerical certificate that (u, z, g) realizes the subgradient structure:
/// g = -div z with z feasible and the pairing saturated, z . grad u = F(x, grad u).
struct CalibrationReport {
  double feasibility_excess = 0.0;   ///< max over cells of (F°(x,z) - 1)+
  double div_residual_abs = 0.0;     ///< sqrt(sum (div z + g)^2 h^d)
  double div_residual_rel = 0.0;     ///< ... / max(||g||_h, tiny)
  double pairing_residual_abs = 0.0; ///< sum (F(x, grad u) - z . grad u) h^d
  double pairing_residual_rel = 0.0; ///< ... / max(sum F h^d, tiny)
  double min_cell_defect = 0.0;      ///< min over cells of F(x, grad u) - z . grad u
  double tv_energy_value = 0.0;      ///< sum F(x, grad u) h^d
};

/// Reports, never judges: all residuals are returned as numbers (no throwing
/// on a bad certificate; only congruence violations throw).
CalibrationReport verify_subgradient(const ScalarField& u, const VectorField& z,
                                     const ScalarField& g, const AnisotropyModel& model);
CalibrationReport verify_subgradient(const SolveResult& result, const AnisotropyModel& model);

/// Closed-form optimal pair for the Euclidean ball problem, rasterized:
///   u = plateau * ramp(dist to the ball), plateau = 1 - d/(lambda R),
///   z = -(x-c)/R inside, -R^{d-1}(x-c)/|x-c|^d outside (unit inward normal
///       on the sphere, divergence -d/R inside, 0 outside),
///   g = -div z of the rasterized field (so the divergence identity is exact
///       by construction; it equals (d/R) inside the ball up to rasterization).
/// The ramp spans ramp_cells grid cells: the O(h)-width mollification keeps
/// the discrete gradient direction aligned with z, which a hard indicator
/// does not (its two jump components land on different cells at generic
/// boundary angles under one-sided differences).
struct BallPair {
  ScalarField u;
  VectorField z;
  ScalarField g;
  double plateau = 0.0;
  double radius = 0.0;
  Vec center{0.0, 0.0, 0.0};
};
BallPair analytic_ball_pair(const GridSpec& grid, Vec center, double radius, double lambda,
                            double ramp_cells = 3.0);

} // namespace atv
