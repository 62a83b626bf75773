#pragma once

// Field CSV files: two comment lines (format tag, grid), a column header,
// then one row per node. Numbers use the shortest round-trip form so identical
// fields always serialise to identical bytes.

#include "hartree_lab/format.hpp"
#include "hartree_lab/grid.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hlab {

inline constexpr const char* field_format_tag = "hartree-lab-field/1";

inline void write_field_csv(std::ostream& os, const RadialField& f) {
  const auto& g = f.grid();
  os << "# format=" << field_format_tag << "\n";
  os << "# r_max=" << shortest(g.r_max()) << ",n=" << g.size() << "\n";
  os << "r,re_u,im_u\n";
  for (std::size_t i = 0; i < f.size(); ++i) {
    os << shortest(g.node(i)) << ',' << shortest(f[i].real()) << ',' << shortest(f[i].imag()) << '\n';
  }
}

inline void write_field_csv(const std::string& path, const RadialField& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_field_csv(os, f);
}

/// Reads a field file. If `grid` is given the file must match it; otherwise a grid
/// is built from the header.
inline RadialField read_field_csv(std::istream& is, GridPtr grid = nullptr) {
  std::string line;
  auto fail = [](const std::string& m) { throw std::runtime_error("field csv: " + m); };
  if (!std::getline(is, line) || line != std::string("# format=") + field_format_tag) {
    fail("missing or unsupported format tag");
  }
  if (!std::getline(is, line) || line.rfind("# r_max=", 0) != 0) fail("missing grid header");
  double r_max = 0.0;
  std::size_t n = 0;
  {
    const auto comma = line.find(",n=");
    if (comma == std::string::npos) fail("malformed grid header");
    r_max = std::stod(line.substr(8, comma - 8));
    n = static_cast<std::size_t>(std::stoull(line.substr(comma + 3)));
  }
  if (grid) {
    if (grid->size() != n || grid->r_max() != r_max) fail("grid in file does not match the requested grid");
  } else {
    grid = RadialGrid::make(r_max, n);
  }
  if (!std::getline(is, line) || line != "r,re_u,im_u") fail("missing column header");
  std::vector<complex> values;
  values.reserve(n);
  std::size_t row = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c)) {
      fail("row " + std::to_string(row + 1) + ": expected three columns");
    }
    if (row >= n) fail("more rows than n");
    const double r = std::stod(a);
    if (std::abs(r - grid->node(row)) > 1e-9 * grid->r_max()) {
      fail("row " + std::to_string(row + 1) + ": radius does not match the grid node");
    }
    values.emplace_back(std::stod(b), std::stod(c));
    ++row;
  }
  if (row != n) fail("expected " + std::to_string(n) + " rows, got " + std::to_string(row));
  return RadialField(grid, std::move(values));
}

inline RadialField read_field_csv(const std::string& path, GridPtr grid = nullptr) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  return read_field_csv(is, std::move(grid));
}

}  // namespace hlab
