#pragma once

#include <stdexcept>
#include <string>

namespace atv {

/// Bad argument values: non-finite inputs, mismatched grids, invalid radii.
class invalid_input_error : public std::invalid_argument {
public:
  explicit invalid_input_error(const std::string& what) : std::invalid_argument(what) {}
};

/// Gradient of a 1-homogeneous integrand requested at p = 0.
class degenerate_point_error : public invalid_input_error {
public:
  explicit degenerate_point_error(const std::string& what) : invalid_input_error(what) {}
};

/// A ball/cylinder average hit zero cells of the active region.
class empty_region_error : public std::runtime_error {
public:
  explicit empty_region_error(const std::string& what) : std::runtime_error(what) {}
};

/// Boundary normal estimate too degenerate to use (norm ratio < 0.5).
class non_reduced_point_error : public std::runtime_error {
public:
  explicit non_reduced_point_error(const std::string& what) : std::runtime_error(what) {}
};

/// Primal energy kept increasing; step sizes or problem data are broken.
class solver_diverged_error : public std::runtime_error {
public:
  explicit solver_diverged_error(const std::string& what) : std::runtime_error(what) {}
};

/// Config file missing, unparsable, or semantically invalid.
class config_error : public std::runtime_error {
public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace atv
