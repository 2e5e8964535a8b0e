#pragma once

#include <array>
#include <string>

#include "atv/errors.hpp"
#include "atv/vec.hpp"

namespace atv {

enum class AnisotropyKind { Euclidean, WeightedEuclidean, Riemannian };

/// Spatially varying norm F(x,p): continuous in x, convex and positively
/// 1-homogeneous in p, elliptic in the sense c0|p| <= F(x,p) <= |p|/c0 and
/// F(x,p) - delta|p| convex in p.
///
/// Three families:
///   Euclidean            F = |p|
///   WeightedEuclidean    F = a(x)|p|,            a(x) = base + amp * prod_i sin(2 pi x_i)
///   Riemannian           F = sqrt(m(x) p^T A p), m(x) = 1 + mod_amp * sin(2 pi x_1) cos(2 pi x_2)
///
/// All spatial modulations are smooth with closed-form bounds, so c0, delta
/// and the polar modulus are exact constants, not estimates.
class AnisotropyModel {
public:
  static AnisotropyModel euclidean(int dim);
  static AnisotropyModel weighted_euclidean(int dim, double base, double amp);
  /// metric: row-major dim x dim symmetric positive definite matrix.
  static AnisotropyModel riemannian(int dim, const std::array<double, 9>& metric,
                                    double mod_amp = 0.0);

  int dimension() const { return dim_; }
  AnisotropyKind kind() const { return kind_; }
  std::string describe() const;

  /// Ellipticity constant: c0|p| <= F(x,p) <= |p|/c0, c0 in (0,1].
  double c0() const { return c0_; }
  /// Largest delta with F(x,.) - delta|.| convex for every x.
  double delta() const { return delta_; }
  /// Same modulus for the polar F°(x,.).
  double polar_delta() const { return polar_delta_; }

  /// Scalar spatial factor: a(x), m(x), or 1.
  double weight(const Vec& x) const;

  double eval(const Vec& x, const Vec& p) const;
  /// Polar norm F°(x,z) = sup { z.p : F(x,p) <= 1 }.
  double polar(const Vec& x, const Vec& z) const;
  /// grad_p F. Throws degenerate_point_error at p = 0.
  Vec grad(const Vec& x, const Vec& p) const;
  /// grad_z F°. Throws degenerate_point_error at z = 0.
  Vec polar_grad(const Vec& x, const Vec& z) const;

  /// F^2(x,y) - F^2(x,z) - 2 F(x,z) grad F(x,z).(y-z) - delta^2 |y-z|^2.
  /// Nonnegative for every y,z by ellipticity; z = 0 handled by continuity.
  double convexity_residual(const Vec& x, const Vec& y, const Vec& z) const;
  /// Same inequality for the polar norm with polar_delta.
  double polar_convexity_residual(const Vec& x, const Vec& y, const Vec& z) const;

  /// z / max(1, F°(x,z)): cheap retraction onto {F°(x,.) <= 1}.
  Vec radial_project(const Vec& x, const Vec& z) const;
  /// Exact Euclidean projection onto {F°(x,.) <= 1}.
  Vec euclidean_project(const Vec& x, const Vec& z) const;

  /// Metric data (Riemannian; identity otherwise), row-major dim x dim.
  const std::array<double, 9>& metric() const { return a_; }
  const std::array<double, 9>& metric_inverse() const { return ainv_; }
  /// Eigenvalues ascending and matching orthonormal columns of metric().
  const std::array<double, 3>& metric_eigenvalues() const { return eigval_; }
  const std::array<double, 9>& metric_eigenvectors() const { return eigvec_; }

private:
  AnisotropyModel() = default;
  void check_point(const Vec& x, const Vec& p, const char* who) const;

  AnisotropyKind kind_ = AnisotropyKind::Euclidean;
  int dim_ = 2;
  double base_ = 1.0, amp_ = 0.0;  // weighted-euclidean a(x)
  double mod_amp_ = 0.0;           // riemannian m(x)
  std::array<double, 9> a_{1, 0, 0, 0, 1, 0, 0, 0, 1};     // metric, row-major
  std::array<double, 9> ainv_{1, 0, 0, 0, 1, 0, 0, 0, 1};  // metric inverse
  std::array<double, 3> eigval_{1, 1, 1};
  std::array<double, 9> eigvec_{1, 0, 0, 0, 1, 0, 0, 0, 1};  // columns = eigenvectors
  double c0_ = 1.0, delta_ = 1.0, polar_delta_ = 1.0;
  double wmin_ = 1.0, wmax_ = 1.0;  // range of weight(x)
};

} // namespace atv
