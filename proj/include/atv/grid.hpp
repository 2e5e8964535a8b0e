#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "atv/errors.hpp"
#include "atv/vec.hpp"

namespace atv {

/// Uniform cell-centered grid over an axis-aligned box, with an optional
/// activity mask (1 = cell belongs to the domain). dim is 2 or 3; 2D grids
/// keep n[2] = 1. Cell (i,j,k) has center origin + h*(i+1/2, j+1/2, k+1/2),
/// linear index (k*n1 + j)*n0 + i.
struct GridSpec {
  int dim = 2;
  std::array<int, 3> n{1, 1, 1};
  double h = 1.0;
  Vec origin{0.0, 0.0, 0.0};
  std::vector<std::uint8_t> mask;  // empty = all cells active

  static GridSpec box(int dim, std::array<int, 3> n, double h, Vec origin = {0, 0, 0});
  /// n x n cells on [0,1]^2, h = 1/n.
  static GridSpec unit_square(int n);
  /// n x n x n cells on [0,1]^3, h = 1/n.
  static GridSpec unit_cube(int n);

  std::size_t cell_count() const {
    return static_cast<std::size_t>(n[0]) * static_cast<std::size_t>(n[1]) *
           static_cast<std::size_t>(n[2]);
  }
  std::size_t index(int i, int j, int k = 0) const {
    return (static_cast<std::size_t>(k) * n[1] + j) * n[0] + i;
  }
  std::array<int, 3> coords(std::size_t idx) const {
    int i = static_cast<int>(idx % n[0]);
    int j = static_cast<int>((idx / n[0]) % n[1]);
    int k = static_cast<int>(idx / (static_cast<std::size_t>(n[0]) * n[1]));
    return {i, j, k};
  }
  Vec cell_center(int i, int j, int k = 0) const {
    return {origin[0] + h * (i + 0.5), origin[1] + h * (j + 0.5),
            dim == 3 ? origin[2] + h * (k + 0.5) : 0.0};
  }
  Vec cell_center(std::size_t idx) const {
    auto c = coords(idx);
    return cell_center(c[0], c[1], c[2]);
  }
  bool in_bounds(int i, int j, int k = 0) const {
    return i >= 0 && i < n[0] && j >= 0 && j < n[1] && k >= 0 && k < n[2];
  }
  bool active(std::size_t idx) const { return mask.empty() || mask[idx] != 0; }
  bool active(int i, int j, int k = 0) const {
    return in_bounds(i, j, k) && active(index(i, j, k));
  }
  double cell_volume() const { return dim == 3 ? h * h * h : h * h; }
  std::size_t stride(int axis) const {
    if (axis == 0) return 1;
    if (axis == 1) return static_cast<std::size_t>(n[0]);
    return static_cast<std::size_t>(n[0]) * n[1];
  }
  bool congruent(const GridSpec& o) const;
  void validate() const;  // throws invalid_input_error
};

/// Cell-centered scalar field.
struct ScalarField {
  GridSpec grid;
  std::vector<double> v;

  static ScalarField zeros(const GridSpec& g) { return {g, std::vector<double>(g.cell_count(), 0.0)}; }
  static ScalarField constant(const GridSpec& g, double c) {
    return {g, std::vector<double>(g.cell_count(), c)};
  }
  /// Pointwise sample of fn at cell centers.
  static ScalarField sample(const GridSpec& g, const std::function<double(const Vec&)>& fn);
  /// Cell average of fn by nsub x nsub (x nsub) midpoint subsampling; the
  /// faithful rasterization of discontinuous data.
  static ScalarField cell_average(const GridSpec& g, const std::function<double(const Vec&)>& fn,
                                  int nsub);
  double min() const;
  double max() const;
};

/// Cell-indexed vector field: component i of cell c lives on the forward
/// face (c, c+e_i), matching the forward-difference gradient.
struct VectorField {
  GridSpec grid;
  std::vector<double> comp[3];

  static VectorField zeros(const GridSpec& g);
  static VectorField sample(const GridSpec& g, const std::function<Vec(const Vec&)>& fn,
                            bool staggered = true);
  Vec at(std::size_t idx) const {
    Vec r{0, 0, 0};
    for (int i = 0; i < grid.dim; ++i) r[i] = comp[i][idx];
    return r;
  }
  double max_norm() const;
};

/// Forward difference with homogeneous-Neumann closure: component i at cell c
/// is (u(c+e_i) - u(c))/h when both cells are active, else 0.
VectorField gradient(const ScalarField& u);
/// Same stencil writing into a preallocated congruent field (no allocation).
void gradient_into(const ScalarField& u, VectorField& z);

/// Negative adjoint of gradient under the h^d inner products: backward
/// difference of face values, so that <grad u, z> = -<u, div z> exactly.
ScalarField divergence(const VectorField& z);
/// Same stencil writing into a preallocated congruent field (no allocation).
void divergence_into(const VectorField& z, ScalarField& d);

/// Indices of active cells with center in the closed ball B_rho(x),
/// in scanline order.
std::vector<std::size_t> cells_in_ball(const GridSpec& g, const Vec& x, double rho);

/// Mean of u over active cells with center in the closed ball B_rho(x).
double ball_average(const ScalarField& u, const Vec& x, double rho);
/// Componentwise mean of z over active cells in B_rho(x).
Vec ball_average(const VectorField& z, const Vec& x, double rho);
/// Mean of z . axis over active cells in the cylinder
/// {|(xi-x).axis| < r, |perp| < rho}; axis need not be normalized (it will be).
double cylinder_average(const VectorField& z, const Vec& x, const Vec& axis, double r, double rho);

} // namespace atv
