#pragma once

#include "atv/anisotropy.hpp"
#include "atv/grid.hpp"

namespace atv {

/// Discrete total variation sum_c F(x_c, grad u(c)) h^d over active cells,
/// forward differences with Neumann/mask closure.
double tv_energy(const ScalarField& u, const AnisotropyModel& model);

} // namespace atv
