#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <boost/graph/adjacency_list.hpp>
#include <boost/graph/push_relabel_max_flow.hpp>

#include "mechopt/boundary_curve.hpp"
#include "mechopt/errors.hpp"
#include "mechopt/grid.hpp"
#include "mechopt/measures.hpp"
#include "mechopt/numerics.hpp"

namespace mechopt {

// g, h supported on C minus R, where C = [c1,top1] x [c2,top2] (tops are the
// quadrature truncation of an unbounded box) and R = {z1 <= r.hi, z2 <= r(z1)}.
struct DominanceProblem {
  Fn2 g, h;
  Box C;
  BoundaryCurve r;
  Fn1 alpha, beta;
  Fn2 eta;
  bool eta_increasing = false;  // caller asserts eta is increasing analytically
  InnerBreaks kinks;            // optional z2 kinks of g and h for fixed z1
};

struct LineProbe {
  Point start;
  int axis = 0;  // 0: integrate along z1, 1: along z2
  double value = 0.0;
};

struct CertReport {
  double threshold = 0.0;
  double total = 0.0;
  bool total_pass = false;
  double line_max = -kInf;
  LineProbe line_worst;
  int probes = 0;
  bool lines_pass = false;
  double eta_violation = 0.0;
  bool eta_sampled = false;
  bool eta_pass = false;
  double decomposition_residual = 0.0;
  bool decomposition_pass = false;
  std::vector<LineProbe> line_values;

  bool passed() const { return total_pass && lines_pass && eta_pass && decomposition_pass; }
  // Smallest slack over the three conditions; negative means a failure.
  double min_margin() const {
    return std::min({total + threshold, threshold - line_max, threshold - eta_violation});
  }
};

// Outward integral of g - h from z along a coordinate axis up to the box top.
inline double outward_line_integral(const DominanceProblem& p, Point z, int axis, const Tolerance& tol) {
  const double top = axis == 0 ? p.C.x1 : p.C.y1;
  const double start = axis == 0 ? z.z1 : z.z2;
  if (!(top > start)) return 0.0;
  auto f = [&](double t) { return axis == 0 ? p.g(t, z.z2) - p.h(t, z.z2) : p.g(z.z1, t) - p.h(z.z1, t); };
  return integrate_1d(f, start, top, tol);
}

// Points on the outer boundary of R inside C: half spaced in z1, half in z2,
// plus the two intercepts with the edges of C.
inline std::vector<Point> boundary_probes(const BoundaryCurve& r, const Box& C, int count) {
  std::vector<Point> out;
  const double xa = std::max(C.x0, r.lo()), xb = std::min(C.x1, r.hi());
  if (!(xb >= xa)) return out;
  const int half = std::max(count / 2, 2);
  for (int i = 0; i <= half; ++i) {
    const double z1 = xa + (xb - xa) * i / half;
    const double z2 = r(z1);
    if (z2 >= C.y0) out.push_back({z1, std::min(z2, C.y1)});
  }
  const double ya = std::max(C.y0, r(xb)), yb = std::min(C.y1, r(xa));
  for (int i = 0; i <= half && yb > ya; ++i) {
    const double z2 = ya + (yb - ya) * i / half;
    out.push_back({std::max(xa, r.inverse(z2)), z2});
  }
  if (r(xb) > C.y0) {
    // Vertical end of R: horizontal rays start on the line z1 = r.hi.
    for (int i = 0; i <= 4; ++i) out.push_back({xb, C.y0 + (r(xb) - C.y0) * i / 4});
  }
  return out;
}

inline CertReport check_region_dominance(const DominanceProblem& p, const Tolerance& tol, int probe_count = 200) {
  CertReport rep;
  rep.threshold = 100.0 * tol.abs_tol;

  for (int i = 1; i < 64; ++i) {
    const double x0 = std::max(p.C.x0, p.r.lo());
    const double x1 = std::min(p.C.x1, p.r.hi());
    const double a = x0 + (x1 - x0) * (i - 1) / 63.0, b = x0 + (x1 - x0) * i / 63.0;
    if (p.r(b) > p.r(a) + 1e-12) throw MalformedRegion("dominance: R is not a decreasing set");
  }

  auto diff = [&](double z1, double z2) { return p.g(z1, z2) - p.h(z1, z2); };
  const Region outside = above_curve(p.r, p.C);
  rep.total = integrate_2d(diff, outside, tol, p.kinks);
  rep.total_pass = rep.total >= -rep.threshold;

  const Tolerance line_tol{tol.abs_tol / 10.0, tol.rel_tol, tol.max_depth};
  for (const Point& z : boundary_probes(p.r, p.C, probe_count)) {
    for (int axis = 0; axis < 2; ++axis) {
      LineProbe lp{z, axis, outward_line_integral(p, z, axis, line_tol)};
      rep.line_values.push_back(lp);
      if (lp.value > rep.line_max) {
        rep.line_max = lp.value;
        rep.line_worst = lp;
      }
    }
    ++rep.probes;
  }
  rep.lines_pass = rep.line_max <= rep.threshold;

  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double w1 = std::min(p.C.x1, p.C.x0 + 50.0) - p.C.x0;
  const double w2 = std::min(p.C.y1, p.C.y0 + 50.0) - p.C.y0;
  auto inside = [&](Point z) { return !(z.z1 <= p.r.hi() && z.z1 >= p.r.lo() && z.z2 <= p.r(z.z1)); };
  auto clip = [&](double v, double lo, double hi) { return std::min(v, std::nextafter(hi, lo)); };
  double resid = 0.0;
  for (int i = 0; i < 2000; ++i) {
    Point z{p.C.x0 + w1 * u(rng), p.C.y0 + w2 * u(rng)};
    Point z2{clip(z.z1 + (p.C.x0 + w1 - z.z1) * u(rng), p.C.x0, p.C.x1),
             clip(z.z2 + (p.C.y0 + w2 - z.z2) * u(rng), p.C.y0, p.C.y1)};
    z.z1 = clip(z.z1, p.C.x0, p.C.x1);
    z.z2 = clip(z.z2, p.C.y0, p.C.y1);
    if (!inside(z)) continue;
    const double d = diff(z.z1, z.z2);
    const double e = p.alpha(z.z1) * p.beta(z.z2) * p.eta(z.z1, z.z2);
    resid = std::max(resid, std::fabs(d - e) / std::max(1.0, std::fabs(d)));
    if (!p.eta_increasing && inside(z2))
      rep.eta_violation = std::max(rep.eta_violation, p.eta(z.z1, z.z2) - p.eta(z2.z1, z2.z2));
  }
  rep.eta_sampled = !p.eta_increasing;
  rep.eta_pass = rep.eta_violation <= rep.threshold;
  rep.decomposition_residual = resid;
  rep.decomposition_pass = resid <= 1e-9;
  return rep;
}

struct DominanceResult {
  bool feasible = false;
  double shortfall = 0.0;  // unrouted mass
  TransportPlan plan;
};

// Decides whether b can be moved onto a using only moves y -> x with y <= x
// coordinate-wise. Masses are rescaled to a common total and rounded to
// integers at 1e-12 resolution; feasibility is a max-flow question.
inline DominanceResult grid_dominance_oracle(const GridMeasure& a, const GridMeasure& b, double tol = 1e-9) {
  const double ta = a.total(), tb = b.total();
  if (std::fabs(ta - tb) > tol) throw MassMismatch("grid_dominance_oracle: totals differ by " + std::to_string(ta - tb));
  constexpr double kScale = 1e12;
  auto to_units = [](const GridMeasure& m, double factor) {
    std::vector<std::int64_t> u(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) u[i] = std::llround(std::max(m.masses[i], 0.0) * factor * kScale);
    return u;
  };
  std::vector<std::int64_t> ua = to_units(a, 1.0);
  std::vector<std::int64_t> ub = to_units(b, tb > 0 ? ta / tb : 1.0);
  std::int64_t sa = 0, sb = 0;
  for (auto v : ua) sa += v;
  for (auto v : ub) sb += v;
  if (sa != sb && !ub.empty()) {
    auto it = std::max_element(ub.begin(), ub.end());
    *it += sa - sb;
    sb = sa;
  }

  using namespace boost;
  using Traits = adjacency_list_traits<vecS, vecS, directedS>;
  using Graph = adjacency_list<vecS, vecS, directedS, no_property,
                               property<edge_capacity_t, std::int64_t,
                                        property<edge_residual_capacity_t, std::int64_t,
                                                 property<edge_reverse_t, Traits::edge_descriptor>>>>;
  const std::size_t na = a.size(), nb = b.size();
  Graph g(na + nb + 2);
  const auto src = static_cast<Traits::vertex_descriptor>(na + nb);
  const auto snk = src + 1;
  auto cap = get(edge_capacity, g);
  auto rev = get(edge_reverse, g);
  auto add = [&](std::size_t u, std::size_t v, std::int64_t c) {
    auto e1 = add_edge(u, v, g).first;
    auto e2 = add_edge(v, u, g).first;
    cap[e1] = c;
    cap[e2] = 0;
    rev[e1] = e2;
    rev[e2] = e1;
    return e1;
  };
  const std::int64_t big = sa + 1;
  std::vector<std::tuple<Traits::edge_descriptor, std::size_t, std::size_t>> middle;
  for (std::size_t j = 0; j < nb; ++j) {
    if (ub[j] <= 0) continue;
    add(src, na + j, ub[j]);
    for (std::size_t i = 0; i < na; ++i)
      if (ua[i] > 0 && weakly_below(b.points[j], a.points[i])) middle.emplace_back(add(na + j, i, big), i, j);
  }
  for (std::size_t i = 0; i < na; ++i)
    if (ua[i] > 0) add(i, snk, ua[i]);

  const std::int64_t flow = push_relabel_max_flow(g, src, snk);
  auto res = get(edge_residual_capacity, g);
  DominanceResult out;
  out.feasible = flow == sb;
  out.shortfall = static_cast<double>(sb - flow) / kScale;
  for (const auto& [e, i, j] : middle) {
    const std::int64_t f = cap[e] - res[e];
    if (f > 0) out.plan.entries.push_back(
          {a.points[i], b.points[j], static_cast<double>(f) / kScale, static_cast<int>(i), static_cast<int>(j)});
  }
  return out;
}

// Cell masses of g and h over C minus R on a product grid with the given edges;
// each cell's mass sits at its centre.
inline std::pair<GridMeasure, GridMeasure> discretize_problem(const DominanceProblem& p, const std::vector<double>& e1,
                                                              const std::vector<double>& e2, const Tolerance& tol) {
  GridMeasure ga, gb;
  const int k1 = static_cast<int>(e1.size()) - 1, k2 = static_cast<int>(e2.size()) - 1;
  for (int i = 0; i < k1; ++i) {
    for (int j = 0; j < k2; ++j) {
      const Box cell{e1[i], e1[i + 1], e2[j], e2[j + 1]};
      // Cells inside R carry no mass.
      if (cell.x1 <= p.r.hi() && cell.x1 >= p.r.lo() && cell.y1 <= p.r(cell.x1)) continue;
      const Region reg = above_curve(p.r, cell);
      const double mg = integrate_2d(p.g, reg, tol, p.kinks);
      const double mh = integrate_2d(p.h, reg, tol, p.kinks);
      const Point c{cell_centre(e1, i), cell_centre(e2, j)};
      if (mg > 0) ga.add(c, mg);
      if (mh > 0) gb.add(c, mh);
    }
  }
  return {ga, gb};
}

// Sum of masses over the union of the upward cones {z : z >= corner}.
inline double mass_on_union_of_bases(const GridMeasure& m, const std::vector<Point>& corners) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (const Point& c : corners)
      if (weakly_below(c, m.points[i])) {
        s += m.masses[i];
        break;
      }
  return s;
}

}  // namespace mechopt
