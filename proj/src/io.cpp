#include "atv/io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "atv/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "field archives are defined little-endian; add byte swapping to port");

namespace atv {

namespace {

void write_doubles(std::ostream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_doubles(std::istream& in, std::vector<double>& v) {
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!in) throw invalid_input_error("field archive: truncated sample block");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw invalid_input_error("cannot open for writing: " + path);
  return out;
}

void write_header(std::ostream& out, const char* kind, const GridSpec& g) {
  out << "atv-field 1\n"
      << kind << ' ' << g.dim << ' ' << g.n[0] << ' ' << g.n[1] << ' ' << g.n[2] << ' ';
  char num[32 * 4];
  std::snprintf(num, sizeof num, "%.17g %.17g %.17g %.17g\n", g.h, g.origin[0],
                g.origin[1], g.origin[2]);
  out << num;
}

GridSpec read_header(std::istream& in, const std::string& path, std::string& kind) {
  std::string magic, version;
  in >> magic >> version;
  if (magic != "atv-field" || version != "1")
    throw invalid_input_error("not a field archive: " + path);
  GridSpec g;
  in >> kind >> g.dim >> g.n[0] >> g.n[1] >> g.n[2] >> g.h >> g.origin[0] >>
      g.origin[1] >> g.origin[2];
  if (!in) throw invalid_input_error("field archive: bad header: " + path);
  in.get();  // the newline before the binary block
  g.validate();
  return g;
}

} // namespace

void write_field(const std::string& path, const ScalarField& u) {
  auto out = open_out(path);
  write_header(out, "scalar", u.grid);
  write_doubles(out, u.v);
}

void write_field(const std::string& path, const VectorField& z) {
  auto out = open_out(path);
  write_header(out, "vector", z.grid);
  for (int i = 0; i < z.grid.dim; ++i) write_doubles(out, z.comp[i]);
}

ScalarField read_scalar_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw invalid_input_error("cannot open field archive: " + path);
  std::string kind;
  GridSpec g = read_header(in, path, kind);
  if (kind != "scalar") throw invalid_input_error("expected a scalar archive: " + path);
  ScalarField u = ScalarField::zeros(g);
  read_doubles(in, u.v);
  return u;
}

VectorField read_vector_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw invalid_input_error("cannot open field archive: " + path);
  std::string kind;
  GridSpec g = read_header(in, path, kind);
  if (kind != "vector") throw invalid_input_error("expected a vector archive: " + path);
  VectorField z = VectorField::zeros(g);
  for (int i = 0; i < g.dim; ++i) read_doubles(in, z.comp[i]);
  return z;
}

void write_pgm(const std::string& path, const ScalarField& u, double lo, double hi) {
  const GridSpec& g = u.grid;
  if (g.dim != 2) throw invalid_input_error("pgm dump: 2D fields only");
  if (lo == hi) {
    lo = u.min();
    hi = u.max();
    if (lo == hi) {  // flat field: render mid-gray
      lo -= 1.0;
      hi += 1.0;
    }
  }
  auto out = open_out(path);
  out << "P5\n" << g.n[0] << ' ' << g.n[1] << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(g.n[0]));
  for (int j = g.n[1] - 1; j >= 0; --j) {
    for (int i = 0; i < g.n[0]; ++i) {
      double t = (u.v[g.index(i, j)] - lo) / (hi - lo);
      t = std::clamp(t, 0.0, 1.0);
      row[static_cast<std::size_t>(i)] = static_cast<unsigned char>(t * 255.0 + 0.5);
    }
    out.write(reinterpret_cast<const char*>(row.data()), g.n[0]);
  }
}

void write_pbm(const std::string& path, const LevelSetView& E) {
  const GridSpec& g = E.grid;
  if (g.dim != 2) throw invalid_input_error("pbm dump: 2D level sets only");
  auto out = open_out(path);
  out << "P4\n" << g.n[0] << ' ' << g.n[1] << "\n";
  const int bytes_per_row = (g.n[0] + 7) / 8;
  std::vector<unsigned char> row(static_cast<std::size_t>(bytes_per_row));
  for (int j = g.n[1] - 1; j >= 0; --j) {
    std::fill(row.begin(), row.end(), 0);
    for (int i = 0; i < g.n[0]; ++i)
      if (E.contains(g.index(i, j)))
        row[static_cast<std::size_t>(i / 8)] |= static_cast<unsigned char>(0x80 >> (i % 8));
    out.write(reinterpret_cast<const char*>(row.data()), bytes_per_row);
  }
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  auto out = open_out(path);
  for (std::size_t i = 0; i < header.size(); ++i)
    out << header[i] << (i + 1 < header.size() ? ',' : '\n');
  char num[64];
  for (const auto& r : rows) {
    if (r.size() != header.size())
      throw invalid_input_error("csv dump: row width does not match header");
    for (std::size_t i = 0; i < r.size(); ++i) {
      std::snprintf(num, sizeof num, "%.17g", r[i]);
      out << num << (i + 1 < r.size() ? ',' : '\n');
    }
  }
}

} // namespace atv
