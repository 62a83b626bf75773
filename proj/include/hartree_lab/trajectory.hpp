#pragma once

#include "hartree_lab/grid.hpp"

#include <map>
#include <string>
#include <vector>

namespace hlab {

/// Column-wise diagnostics, one entry per sample time.
struct DiagnosticsSeries {
  std::vector<double> t;
  std::vector<double> M, E, E0, P, grad_sq, lambda_sq;
  std::vector<double> z, zp, zpp;
  std::map<double, std::vector<double>> mass_in_ball;  // keyed by R
  std::vector<double> exported_mass;
  std::vector<double> threshold_track;  // P(u) M(u)^sigma_c

  [[nodiscard]] std::size_t size() const { return t.size(); }
};

struct Trajectory {
  std::vector<double> times;        // sample times, from 0
  std::vector<RadialField> fields;  // empty unless snapshots were requested
  DiagnosticsSeries diagnostics;
  std::vector<std::string> warnings;
  std::size_t steps = 0;
  double dt = 0.0;
};

}  // namespace hlab
