#pragma once

#include <array>
#include <cmath>

namespace atv {

/// Fixed-size spatial vector. Dimension (2 or 3) travels separately;
/// unused trailing components stay zero.
using Vec = std::array<double, 3>;

inline constexpr Vec vec2(double x, double y) { return {x, y, 0.0}; }
inline constexpr Vec vec3(double x, double y, double z) { return {x, y, z}; }

inline double dot(const Vec& a, const Vec& b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Vec& a, int dim) { return std::sqrt(dot(a, a, dim)); }

inline Vec scaled(const Vec& a, double s, int dim) {
  Vec r{0.0, 0.0, 0.0};
  for (int i = 0; i < dim; ++i) r[i] = a[i] * s;
  return r;
}

inline Vec sub(const Vec& a, const Vec& b, int dim) {
  Vec r{0.0, 0.0, 0.0};
  for (int i = 0; i < dim; ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vec add(const Vec& a, const Vec& b, int dim) {
  Vec r{0.0, 0.0, 0.0};
  for (int i = 0; i < dim; ++i) r[i] = a[i] + b[i];
  return r;
}

inline double dist(const Vec& a, const Vec& b, int dim) { return norm(sub(a, b, dim), dim); }

inline bool finite(const Vec& a, int dim) {
  for (int i = 0; i < dim; ++i)
    if (!std::isfinite(a[i])) return false;
  return true;
}

/// Neumaier compensated accumulator; keeps reductions exact enough for
/// 1e-12 adjointness checks on 3D grids.
class Accumulator {
public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

} // namespace atv
