#pragma once

#include <cmath>
#include <numeric>
#include <vector>

#include "mechopt/boundary_curve.hpp"
#include "mechopt/distributions.hpp"

namespace mechopt {

// Finitely supported measure on the plane.
struct GridMeasure {
  std::vector<Point> points;
  std::vector<double> masses;

  void add(Point p, double m) {
    points.push_back(p);
    masses.push_back(m);
  }
  std::size_t size() const { return points.size(); }
  double total() const { return std::accumulate(masses.begin(), masses.end(), 0.0); }
};

struct TransportEntry {
  Point x;  // receiving point
  Point y;  // sending point
  double mass = 0.0;
  int xi = -1, yi = -1;  // indices into the source measures, when known
};

struct TransportPlan {
  std::vector<TransportEntry> entries;
  double total() const {
    double t = 0.0;
    for (const auto& e : entries) t += e.mass;
    return t;
  }
};

inline bool weakly_below(Point y, Point x) { return y.z1 <= x.z1 && y.z2 <= x.z2; }

// Cost of moving a unit from y up to x when only increases are charged.
inline double transport_cost(Point x, Point y) {
  return std::max(x.z1 - y.z1, 0.0) + std::max(x.z2 - y.z2, 0.0);
}

// k cells for one item: uniform over [lo, q_hi] with the last cell stretched
// to `top`. Returns k+1 edges.
inline std::vector<double> cell_edges(double lo, double q_hi, double top, int k) {
  std::vector<double> e(k + 1);
  const double hi = std::min(std::max(q_hi, lo + 1e-9), top);
  for (int j = 0; j <= k; ++j) e[j] = lo + (hi - lo) * j / k;
  e[k] = top;
  return e;
}

// Representative point of cell j: the centre of its nominal uniform width.
inline double cell_centre(const std::vector<double>& e, int j) {
  const double w = e[1] - e[0];
  return e[0] + w * (j + 0.5);
}

inline std::vector<double> quantile_edges(const ItemDistribution& d, double lo, double top, int k, double q = 0.995) {
  return cell_edges(lo, std::max(lo, d.quantile(q)), top, k);
}

}  // namespace mechopt
