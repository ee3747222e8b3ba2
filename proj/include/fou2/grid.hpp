#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

// Partition of [0, T] carrying cell midpoints and widths; the
// discretization backbone for the Gram matrix and the step kernels.

namespace fou2 {

struct TimeGrid {
  double horizon = 0.0;
  int n = 0;
  Eigen::VectorXd edges;   // n+1, strictly increasing, edges[0] = 0
  Eigen::VectorXd mids;    // n
  Eigen::VectorXd widths;  // n
  bool uniform = false;
};

// Accepts any partition with >= 1 cell; build_grid enforces the >= 2 cells
// the statistic needs, but degenerate single-cell grids are allowed here
// so edge-case behavior of the integrators stays testable.
inline TimeGrid grid_from_edges(const std::vector<double>& e) {
  if (e.size() < 2)
    throw std::invalid_argument("grid_from_edges: need at least 1 cell");
  if (e.front() != 0.0)
    throw std::invalid_argument("grid_from_edges: first edge must be 0");
  TimeGrid g;
  g.n = static_cast<int>(e.size()) - 1;
  g.edges = Eigen::Map<const Eigen::VectorXd>(e.data(), e.size());
  g.horizon = e.back();
  g.mids.resize(g.n);
  g.widths.resize(g.n);
  for (int i = 0; i < g.n; ++i) {
    if (!(e[i + 1] > e[i]))
      throw std::invalid_argument(
          "grid_from_edges: edges must be strictly increasing");
    g.widths[i] = e[i + 1] - e[i];
    g.mids[i] = 0.5 * (e[i] + e[i + 1]);
  }
  const double w0 = g.widths[0];
  g.uniform = ((g.widths.array() - w0).abs() <= 1e-14 * w0).all();
  return g;
}

inline TimeGrid build_grid(double T, int n) {
  if (!(T > 0.0)) throw std::invalid_argument("build_grid: T must be > 0");
  if (n < 2) throw std::invalid_argument("build_grid: n must be >= 2");
  std::vector<double> e(n + 1);
  for (int k = 0; k <= n; ++k) e[k] = T * k / n;
  e[n] = T;
  TimeGrid g = grid_from_edges(e);
  g.uniform = true;
  return g;
}

}  // namespace fou2
