#include "atv/energy.hpp"

namespace atv {

double tv_energy(const ScalarField& u, const AnisotropyModel& model) {
  const GridSpec& g = u.grid;
  if (g.dim != model.dimension())
    throw invalid_input_error("tv_energy: grid and anisotropy dimension differ");
  VectorField gr = gradient(u);
  Accumulator acc;
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    if (!g.active(c)) continue;
    Vec p = gr.at(c);
    if (p[0] == 0.0 && p[1] == 0.0 && p[2] == 0.0) continue;
    acc.add(model.eval(g.cell_center(c), p));
  }
  return acc.value() * g.cell_volume();
}

} // namespace atv
