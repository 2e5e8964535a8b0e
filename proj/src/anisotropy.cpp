#include "atv/anisotropy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace atv {

namespace {

constexpr double kPi = 3.14159265358979323846;

Vec mat_apply(const std::array<double, 9>& m, const Vec& v, int dim) {
  Vec r{0, 0, 0};
  for (int i = 0; i < dim; ++i) {
    double s = 0.0;
    for (int j = 0; j < dim; ++j) s += m[i * 3 + j] * v[j];
    r[i] = s;
  }
  return r;
}

/// Cyclic Jacobi for a symmetric dim x dim block of a row-major 3x3 matrix.
/// Fills eigenvalues (ascending) and matching eigenvector columns.
void jacobi_eigen(std::array<double, 9> a, int dim, std::array<double, 3>& val,
                  std::array<double, 9>& vec) {
  vec = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0, diag = 0.0;
    for (int i = 0; i < dim; ++i)
      for (int j = i + 1; j < dim; ++j) off += a[i * 3 + j] * a[i * 3 + j];
    for (int i = 0; i < dim; ++i) diag += a[i * 3 + i] * a[i * 3 + i];
    if (off <= 1e-30 * std::max(diag, 1e-300)) break;
    for (int i = 0; i < dim; ++i) {
      for (int j = i + 1; j < dim; ++j) {
        double apq = a[i * 3 + j];
        if (apq == 0.0) continue;
        double theta = (a[j * 3 + j] - a[i * 3 + i]) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int k = 0; k < 3; ++k) {  // rotate rows/cols i,j of a
          double aki = a[k * 3 + i], akj = a[k * 3 + j];
          a[k * 3 + i] = c * aki - s * akj;
          a[k * 3 + j] = s * aki + c * akj;
        }
        for (int k = 0; k < 3; ++k) {
          double aik = a[i * 3 + k], ajk = a[j * 3 + k];
          a[i * 3 + k] = c * aik - s * ajk;
          a[j * 3 + k] = s * aik + c * ajk;
        }
        for (int k = 0; k < 3; ++k) {  // accumulate rotation into eigenvector columns
          double vki = vec[k * 3 + i], vkj = vec[k * 3 + j];
          vec[k * 3 + i] = c * vki - s * vkj;
          vec[k * 3 + j] = s * vki + c * vkj;
        }
      }
    }
  }
  val = {a[0], a[4], a[8]};
  // sort the dim real eigenpairs ascending
  for (int i = 0; i < dim; ++i) {
    int lo = i;
    for (int j = i + 1; j < dim; ++j)
      if (val[j] < val[lo]) lo = j;
    if (lo != i) {
      std::swap(val[i], val[lo]);
      for (int k = 0; k < 3; ++k) std::swap(vec[k * 3 + i], vec[k * 3 + lo]);
    }
  }
}

} // namespace

AnisotropyModel AnisotropyModel::euclidean(int dim) {
  if (dim != 2 && dim != 3) throw invalid_input_error("anisotropy: dimension must be 2 or 3");
  AnisotropyModel m;
  m.kind_ = AnisotropyKind::Euclidean;
  m.dim_ = dim;
  return m;
}

AnisotropyModel AnisotropyModel::weighted_euclidean(int dim, double base, double amp) {
  if (dim != 2 && dim != 3) throw invalid_input_error("anisotropy: dimension must be 2 or 3");
  if (!std::isfinite(base) || !std::isfinite(amp) || amp < 0.0 || base - amp <= 0.0)
    throw invalid_input_error("anisotropy: weight must stay positive (need base > amp >= 0)");
  AnisotropyModel m;
  m.kind_ = AnisotropyKind::WeightedEuclidean;
  m.dim_ = dim;
  m.base_ = base;
  m.amp_ = amp;
  m.wmin_ = base - amp;
  m.wmax_ = base + amp;
  m.c0_ = std::min({m.wmin_, 1.0 / m.wmax_, 1.0});
  m.delta_ = std::min(m.wmin_, m.c0_);
  m.polar_delta_ = std::min(1.0 / m.wmax_, m.c0_);
  return m;
}

AnisotropyModel AnisotropyModel::riemannian(int dim, const std::array<double, 9>& metric,
                                            double mod_amp) {
  if (dim != 2 && dim != 3) throw invalid_input_error("anisotropy: dimension must be 2 or 3");
  if (!std::isfinite(mod_amp) || std::abs(mod_amp) >= 1.0)
    throw invalid_input_error("anisotropy: |mod_amp| must be < 1");
  double scale = 0.0;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) scale = std::max(scale, std::abs(metric[i * 3 + j]));
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw invalid_input_error("anisotropy: metric entries must be finite and not all zero");
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j)
      if (std::abs(metric[i * 3 + j] - metric[j * 3 + i]) > 1e-12 * scale)
        throw invalid_input_error("anisotropy: metric must be symmetric");

  AnisotropyModel m;
  m.kind_ = AnisotropyKind::Riemannian;
  m.dim_ = dim;
  m.mod_amp_ = mod_amp;
  m.a_ = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m.a_[i * 3 + j] = metric[i * 3 + j];
  jacobi_eigen(m.a_, dim, m.eigval_, m.eigvec_);
  double lmin = m.eigval_[0], lmax = m.eigval_[dim - 1];
  if (!(lmin > 1e-14 * lmax) || lmax <= 0.0)
    throw invalid_input_error("anisotropy: metric must be positive definite");
  // A^{-1} = Q diag(1/lambda) Q^T
  m.ainv_ = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      double s = 0.0;
      for (int k = 0; k < dim; ++k) s += m.eigvec_[i * 3 + k] * m.eigvec_[j * 3 + k] / m.eigval_[k];
      m.ainv_[i * 3 + j] = s;
    }
  m.wmin_ = 1.0 - std::abs(mod_amp);
  m.wmax_ = 1.0 + std::abs(mod_amp);
  m.c0_ = std::min({std::sqrt(m.wmin_ * lmin), 1.0 / std::sqrt(m.wmax_ * lmax), 1.0});
  // sharp moduli: min curvature radius of the respective dual unit balls
  m.delta_ = std::min(std::sqrt(m.wmin_) * lmin / std::sqrt(lmax), m.c0_);
  m.polar_delta_ = std::min(std::sqrt(lmin) / (std::sqrt(m.wmax_) * lmax), m.c0_);
  return m;
}

std::string AnisotropyModel::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case AnisotropyKind::Euclidean:
      os << "euclidean(d=" << dim_ << ")";
      break;
    case AnisotropyKind::WeightedEuclidean:
      os << "weighted_euclidean(d=" << dim_ << ", base=" << base_ << ", amp=" << amp_ << ")";
      break;
    case AnisotropyKind::Riemannian:
      os << "riemannian(d=" << dim_ << ", eig=[";
      for (int i = 0; i < dim_; ++i) os << (i ? "," : "") << eigval_[i];
      os << "], mod=" << mod_amp_ << ")";
      break;
  }
  return os.str();
}

void AnisotropyModel::check_point(const Vec& x, const Vec& p, const char* who) const {
  if (!finite(x, dim_) || !finite(p, dim_))
    throw invalid_input_error(std::string("anisotropy: non-finite argument in ") + who);
}

double AnisotropyModel::weight(const Vec& x) const {
  switch (kind_) {
    case AnisotropyKind::Euclidean:
      return 1.0;
    case AnisotropyKind::WeightedEuclidean: {
      double s = 1.0;
      for (int i = 0; i < dim_; ++i) s *= std::sin(2.0 * kPi * x[i]);
      return base_ + amp_ * s;
    }
    case AnisotropyKind::Riemannian:
      return 1.0 + mod_amp_ * std::sin(2.0 * kPi * x[0]) * std::cos(2.0 * kPi * x[1]);
  }
  return 1.0;
}

double AnisotropyModel::eval(const Vec& x, const Vec& p) const {
  check_point(x, p, "eval");
  switch (kind_) {
    case AnisotropyKind::Euclidean:
      return norm(p, dim_);
    case AnisotropyKind::WeightedEuclidean:
      return weight(x) * norm(p, dim_);
    case AnisotropyKind::Riemannian:
      return std::sqrt(weight(x) * dot(p, mat_apply(a_, p, dim_), dim_));
  }
  return 0.0;
}

double AnisotropyModel::polar(const Vec& x, const Vec& z) const {
  check_point(x, z, "polar");
  switch (kind_) {
    case AnisotropyKind::Euclidean:
      return norm(z, dim_);
    case AnisotropyKind::WeightedEuclidean:
      return norm(z, dim_) / weight(x);
    case AnisotropyKind::Riemannian:
      return std::sqrt(dot(z, mat_apply(ainv_, z, dim_), dim_) / weight(x));
  }
  return 0.0;
}

Vec AnisotropyModel::grad(const Vec& x, const Vec& p) const {
  check_point(x, p, "grad");
  double f = eval(x, p);
  if (f == 0.0) throw degenerate_point_error("anisotropy: grad undefined at p = 0");
  switch (kind_) {
    case AnisotropyKind::Euclidean:
      return scaled(p, 1.0 / f, dim_);
    case AnisotropyKind::WeightedEuclidean: {
      double a = weight(x);
      return scaled(p, a * a / f, dim_);
    }
    case AnisotropyKind::Riemannian:
      return scaled(mat_apply(a_, p, dim_), weight(x) / f, dim_);
  }
  return {0, 0, 0};
}

Vec AnisotropyModel::polar_grad(const Vec& x, const Vec& z) const {
  check_point(x, z, "polar_grad");
  double f = polar(x, z);
  if (f == 0.0) throw degenerate_point_error("anisotropy: polar_grad undefined at z = 0");
  switch (kind_) {
    case AnisotropyKind::Euclidean:
      return scaled(z, 1.0 / f, dim_);
    case AnisotropyKind::WeightedEuclidean: {
      double a = weight(x);
      return scaled(z, 1.0 / (a * a * f), dim_);
    }
    case AnisotropyKind::Riemannian:
      return scaled(mat_apply(ainv_, z, dim_), 1.0 / (weight(x) * f), dim_);
  }
  return {0, 0, 0};
}

double AnisotropyModel::convexity_residual(const Vec& x, const Vec& y, const Vec& z) const {
  check_point(x, y, "convexity_residual");
  check_point(x, z, "convexity_residual");
  // grad of F^2 extends continuously through z = 0, so no degeneracy here
  Vec g{0, 0, 0};
  switch (kind_) {
    case AnisotropyKind::Euclidean:
      g = scaled(z, 2.0, dim_);
      break;
    case AnisotropyKind::WeightedEuclidean: {
      double a = weight(x);
      g = scaled(z, 2.0 * a * a, dim_);
      break;
    }
    case AnisotropyKind::Riemannian:
      g = scaled(mat_apply(a_, z, dim_), 2.0 * weight(x), dim_);
      break;
  }
  Vec d = sub(y, z, dim_);
  double fy = eval(x, y), fz = eval(x, z);
  return fy * fy - fz * fz - dot(g, d, dim_) - delta_ * delta_ * dot(d, d, dim_);
}

double AnisotropyModel::polar_convexity_residual(const Vec& x, const Vec& y, const Vec& z) const {
  check_point(x, y, "polar_convexity_residual");
  check_point(x, z, "polar_convexity_residual");
  Vec g{0, 0, 0};
  switch (kind_) {
    case AnisotropyKind::Euclidean:
      g = scaled(z, 2.0, dim_);
      break;
    case AnisotropyKind::WeightedEuclidean: {
      double a = weight(x);
      g = scaled(z, 2.0 / (a * a), dim_);
      break;
    }
    case AnisotropyKind::Riemannian:
      g = scaled(mat_apply(ainv_, z, dim_), 2.0 / weight(x), dim_);
      break;
  }
  Vec d = sub(y, z, dim_);
  double fy = polar(x, y), fz = polar(x, z);
  return fy * fy - fz * fz - dot(g, d, dim_) - polar_delta_ * polar_delta_ * dot(d, d, dim_);
}

Vec AnisotropyModel::radial_project(const Vec& x, const Vec& z) const {
  double s = polar(x, z);
  return s <= 1.0 ? z : scaled(z, 1.0 / s, dim_);
}

Vec AnisotropyModel::euclidean_project(const Vec& x, const Vec& z) const {
  check_point(x, z, "euclidean_project");
  switch (kind_) {
    case AnisotropyKind::Euclidean: {
      double r = norm(z, dim_);
      return r <= 1.0 ? z : scaled(z, 1.0 / r, dim_);
    }
    case AnisotropyKind::WeightedEuclidean: {
      double a = weight(x);
      double r = norm(z, dim_);
      return r <= a ? z : scaled(z, a / r, dim_);
    }
    case AnisotropyKind::Riemannian: {
      // project onto the ellipsoid z^T A^{-1} z <= m(x) in the eigenbasis of A
      double m = weight(x);
      Vec w{0, 0, 0};
      for (int c = 0; c < dim_; ++c) {
        double s = 0.0;
        for (int r = 0; r < dim_; ++r) s += eigvec_[r * 3 + c] * z[r];
        w[c] = s;
      }
      double q = 0.0;
      for (int c = 0; c < dim_; ++c) q += w[c] * w[c] / eigval_[c];
      if (q <= m) return z;
      // phi(mu) = sum (w_c / (1 + mu/lambda_c))^2 / lambda_c - m is convex
      // decreasing; Newton from mu = 0 converges monotonically from below
      double mu = 0.0;
      for (int it = 0; it < 200; ++it) {
        double phi = -m, dphi = 0.0;
        for (int c = 0; c < dim_; ++c) {
          double den = 1.0 + mu / eigval_[c];
          double wc = w[c] / den;
          phi += wc * wc / eigval_[c];
          dphi -= 2.0 * wc * wc / (eigval_[c] * eigval_[c] * den);
        }
        if (phi <= m * 1e-14) break;
        mu -= phi / dphi;
      }
      Vec zh{0, 0, 0};
      for (int c = 0; c < dim_; ++c) zh[c] = w[c] / (1.0 + mu / eigval_[c]);
      Vec out{0, 0, 0};
      for (int r = 0; r < dim_; ++r) {
        double s = 0.0;
        for (int c = 0; c < dim_; ++c) s += eigvec_[r * 3 + c] * zh[c];
        out[r] = s;
      }
      return out;
    }
  }
  return z;
}

} // namespace atv
