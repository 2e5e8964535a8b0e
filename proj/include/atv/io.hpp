#pragma once

#include <string>
#include <vector>

#include "atv/geometry.hpp"
#include "atv/grid.hpp"

namespace atv {

/// Raw field archive: one text header line "atv-field 1", one line of shape
/// metadata, then the samples as little-endian binary doubles (cell-major;
/// vector fields store whole components back to back). Round-trips exactly.
void write_field(const std::string& path, const ScalarField& u);
void write_field(const std::string& path, const VectorField& z);
ScalarField read_scalar_field(const std::string& path);
VectorField read_vector_field(const std::string& path);

/// 8-bit PGM (P5) of a 2D scalar field, values affinely mapped from
/// [lo, hi] (clamped); rows are written top-down in decreasing y so the
/// image matches the mathematical orientation. lo == hi uses the field's
/// own min/max (flat fields render mid-gray).
void write_pgm(const std::string& path, const ScalarField& u, double lo = 0.0,
               double hi = 0.0);

/// 1-bit PBM (P4) of a 2D level set (membership mask), same orientation.
void write_pbm(const std::string& path, const LevelSetView& E);

/// CSV with a header row; every cell printed with max-roundtrip precision.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

} // namespace atv
