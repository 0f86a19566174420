#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mechopt/boundary_curve.hpp"
#include "mechopt/bundling.hpp"
#include "mechopt/dominance.hpp"
#include "mechopt/errors.hpp"
#include "mechopt/measures.hpp"
#include "mechopt/mechanism.hpp"
#include "mechopt/numerics.hpp"

namespace mechopt {

struct CurveOptions {
  int samples = 400;  // per parametrization
};

// Integral of f2(t) eta(z1, t) over t in [z2, top]; vanishes on the upper curve.
inline double column_integral(const TransformField& field, double z1, double z2, const Tolerance& tol) {
  const double top = field.top(1, tol.abs_tol);
  if (!(top > z2)) return 0.0;
  const auto& f2 = field.item(1).pdf;
  return integrate_1d([&](double t) { return f2(t) * field.eta(z1, t); }, z2, top, tol);
}

// Integral of f1(t) eta(t, z2) over t in [z1, top]; vanishes on the right curve.
inline double row_integral(const TransformField& field, double z1, double z2, const Tolerance& tol) {
  const double top = field.top(0, tol.abs_tol);
  if (!(top > z1)) return 0.0;
  const auto& f1 = field.item(0).pdf;
  return integrate_1d([&](double t) { return f1(t) * field.eta(t, z2); }, z1, top, tol);
}

namespace detail {

// Largest coordinate usable as a bracket end inside the support of item i.
inline double upper_end(const TransformField& field, int i, const Tolerance& tol) {
  const auto& d = field.item(i);
  const double top = field.top(i, tol.abs_tol);
  return std::isfinite(d.hi) ? std::nextafter(std::min(top, d.hi), d.lo) : top;
}

// First argument at which g becomes nonnegative on [lo, hi], scanning outward.
template <class G>
double increasing_root(const G& g, double lo, double hi, const Tolerance& tol, const char* what) {
  const double glo = g(lo);
  if (glo >= 0) return lo;
  double prev = lo;
  for (int k = 1; k <= 64; ++k) {
    const double x = lo + (hi - lo) * std::pow(static_cast<double>(k) / 64.0, 2.0);
    if (g(x) >= 0) return find_root(g, prev, x, tol);
    prev = x;
  }
  throw CurveNotFound(std::string(what) + ": no sign change up to " + std::to_string(hi));
}

// Fritsch-Carlson limit: each knot slope at most three times the adjacent
// secants, which keeps the cubic Hermite interpolant monotone.
inline void limit_slopes(const std::vector<Point>& pts, std::vector<double>& m) {
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    double lim = kInf;
    if (i > 0) lim = std::min(lim, 3.0 * std::fabs((pts[i].z2 - pts[i - 1].z2) / (pts[i].z1 - pts[i - 1].z1)));
    if (i + 1 < n) lim = std::min(lim, 3.0 * std::fabs((pts[i + 1].z2 - pts[i].z2) / (pts[i + 1].z1 - pts[i].z1)));
    if (!std::isfinite(m[i]) || m[i] < -lim) m[i] = -lim;
    if (m[i] > 0) m[i] = 0;
  }
}

// Sorts by z1, drops near-duplicates and rounding blips in monotonicity.
inline void merge_samples(std::vector<Point>& pts) {
  std::sort(pts.begin(), pts.end(), [](const Point& p, const Point& q) { return p.z1 < q.z1; });
  std::vector<Point> out;
  for (const auto& p : pts) {
    if (!out.empty() && p.z1 - out.back().z1 < 1e-9) continue;
    Point q = p;
    if (!out.empty() && q.z2 > out.back().z2) {
      if (q.z2 - out.back().z2 > 1e-7) throw MalformedRegion("boundary curve samples are not decreasing");
      q.z2 = out.back().z2;
    }
    out.push_back(q);
  }
  pts = std::move(out);
}

}  // namespace detail

struct BoundaryCurves {
  BoundaryCurve top;    // zero upward integrals
  BoundaryCurve right;  // zero rightward integrals
};

inline BoundaryCurve compute_top_curve(const TransformField& field, const Tolerance& tol, const CurveOptions& opt = {}) {
  const Point d = field.dminus();
  const double x_hi = detail::upper_end(field, 0, tol), y_hi = detail::upper_end(field, 1, tol);
  auto G = [&](double z1, double z2) { return column_integral(field, z1, z2, tol); };
  // Above the X/Y boundary the integrand is positive, so it caps the bracket.
  auto cap = [&](double z1) {
    try {
      return detail::increasing_root([&](double t) { return field.eta(z1, t); }, d.z2, y_hi, tol, "eta column");
    } catch (const CurveNotFound&) {
      return y_hi;
    }
  };
  auto at_z1 = [&](double z1) {
    return detail::increasing_root([&](double t) { return G(z1, t); }, d.z2, cap(z1), tol, "upper curve");
  };
  if (G(d.z1, d.z2) >= 0) throw CurveNotFound("upper curve: column through the lower corner has no sign change");
  const double x_end = detail::increasing_root([&](double t) { return G(t, d.z2); }, d.z1, x_hi, tol, "upper curve end");
  const double y_start = at_z1(d.z1);

  std::vector<Point> pts;
  const int n = opt.samples;
  for (int i = 0; i <= n; ++i) {
    const double z1 = d.z1 + (x_end - d.z1) * i / n;
    pts.push_back({z1, i == n ? d.z2 : at_z1(z1)});
  }
  for (int i = 1; i < n; ++i) {
    const double z2 = d.z2 + (y_start - d.z2) * i / n;
    pts.push_back({find_root([&](double t) { return G(t, z2); }, d.z1, x_end, tol), z2});
  }
  detail::merge_samples(pts);
  std::vector<double> m;
  const auto& f2 = field.item(1);
  for (const auto& p : pts) {
    const double eta = field.eta(p.z1, p.z2);
    m.push_back(-field.item(0).elasticity_slope(p.z1) * f2.survival(p.z2) / (f2.pdf(p.z2) * eta));
  }
  detail::limit_slopes(pts, m);
  return BoundaryCurve::hermite(pts, m, true);
}

inline BoundaryCurve compute_right_curve(const TransformField& field, const Tolerance& tol,
                                         const CurveOptions& opt = {}) {
  const Point d = field.dminus();
  const double x_hi = detail::upper_end(field, 0, tol), y_hi = detail::upper_end(field, 1, tol);
  auto H = [&](double z1, double z2) { return row_integral(field, z1, z2, tol); };
  auto cap = [&](double z2) {
    try {
      return detail::increasing_root([&](double t) { return field.eta(t, z2); }, d.z1, x_hi, tol, "eta row");
    } catch (const CurveNotFound&) {
      return x_hi;
    }
  };
  if (H(d.z1, d.z2) >= 0) throw CurveNotFound("right curve: row through the lower corner has no sign change");
  const double x_end = detail::increasing_root([&](double t) { return H(t, d.z2); }, d.z1, cap(d.z2), tol,
                                               "right curve end");
  const double y_start = detail::increasing_root([&](double t) { return H(d.z1, t); }, d.z2, y_hi, tol,
                                                 "right curve start");
  auto at_z2 = [&](double z2) {
    return detail::increasing_root([&](double t) { return H(t, z2); }, d.z1, cap(z2), tol, "right curve");
  };

  std::vector<Point> pts;
  const int n = opt.samples;
  for (int i = 0; i <= n; ++i) {
    const double z2 = d.z2 + (y_start - d.z2) * i / n;
    pts.push_back({i == n ? d.z1 : (i == 0 ? x_end : at_z2(z2)), z2});
  }
  for (int i = 1; i < n; ++i) {
    const double z1 = d.z1 + (x_end - d.z1) * i / n;
    pts.push_back({z1, find_root([&](double t) { return H(z1, t); }, d.z2, y_start, tol)});
  }
  detail::merge_samples(pts);
  std::vector<double> m;
  const auto& f1 = field.item(0);
  for (const auto& p : pts) {
    const double eta = field.eta(p.z1, p.z2);
    m.push_back(-f1.pdf(p.z1) * eta / (field.item(1).elasticity_slope(p.z2) * f1.survival(p.z1)));
  }
  detail::limit_slopes(pts, m);
  return BoundaryCurve::hermite(pts, m, true);
}

inline BoundaryCurves compute_boundary_curves(const TransformField& field, const Tolerance& tol = {},
                                              const CurveOptions& opt = {}) {
  return {compute_top_curve(field, tol, opt), compute_right_curve(field, tol, opt)};
}

struct CanonicalPartition {
  BoundaryCurve s;  // outer boundary of the zero set, on [d1-, c]
  double a = 0.0, b = 0.0, c = 0.0;
  double p_star = 0.0;
  BoundaryCurves curves;
  Point dminus;
};

struct ZeroSetGeometry {
  double top_peak = 0.0, top_argmax = 0.0;      // max of S_top(z1) + z1
  double right_peak = 0.0, right_argmax = 0.0;  // max of S_right(z1) + z1
  double right_end = 0.0;                       // z1 where S_right meets the bottom edge
  double p_max = 0.0;                           // largest price with a 45-degree segment
};

inline ZeroSetGeometry zero_set_geometry(const BoundaryCurves& cv, Point d) {
  ZeroSetGeometry g;
  const Extremum t = maximize_1d([&](double x) { return cv.top(x) + x; }, cv.top.lo(), cv.top.hi(), 256);
  const Extremum r = maximize_1d([&](double x) { return cv.right(x) + x; }, cv.right.lo(), cv.right.hi(), 256);
  g.top_peak = t.value;
  g.top_argmax = t.x;
  g.right_peak = r.value;
  g.right_argmax = r.x;
  g.right_end = cv.right.hi();
  g.p_max = std::min(g.top_peak, std::max(g.right_peak, g.right_end + d.z2));
  return g;
}

struct SegmentEnds {
  double a = 0.0, b = 0.0, c = 0.0;
};

// Where the line z1 + z2 = p leaves S_top (a) and meets S_right (b).
inline SegmentEnds segment_ends(const BoundaryCurves& cv, const ZeroSetGeometry& geo, Point d, double p,
                                const Tolerance& tol = {}) {
  const Tolerance rt{std::min(tol.abs_tol, 1e-12), tol.rel_tol, tol.max_depth};
  SegmentEnds e;
  if (cv.top(d.z1) + d.z1 >= p)
    e.a = d.z1;
  else
    e.a = find_root([&](double x) { return cv.top(x) + x - p; }, d.z1, geo.top_argmax, rt);
  if (p <= geo.right_end + d.z2) {
    e.b = e.c = p - d.z2;
  } else {
    e.b = find_root([&](double x) { return cv.right(x) + x - p; }, geo.right_argmax, geo.right_end, rt);
    e.c = geo.right_end;
  }
  return e;
}

// Caps p_max where the curves cross: above it the segment would run backwards.
inline void limit_to_crossing(const BoundaryCurves& cv, ZeroSetGeometry& geo, Point d, const Tolerance& tol = {}) {
  auto ordered = [&](double p) {
    const SegmentEnds e = segment_ends(cv, geo, d, p, tol);
    return e.a <= e.b;
  };
  if (ordered(geo.p_max)) return;
  double lo = d.z1 + d.z2, hi = geo.p_max;
  for (int i = 0; i < 100 && hi - lo > 1e-14; ++i) {
    const double mid = 0.5 * (lo + hi);
    (ordered(mid) ? lo : hi) = mid;
  }
  geo.p_max = lo;
}

// Zero set at price p: S_top up to a, the 45-degree line from a to b, S_right
// from b to c. a and b are where the line meets the curves.
inline CanonicalPartition assemble_partition(const BoundaryCurves& cv, const ZeroSetGeometry& geo, Point d, double p,
                                             const Tolerance& tol = {}) {
  if (p > geo.p_max + 1e-12) throw NoSolution("assemble_partition: price above the largest admissible value");
  CanonicalPartition part;
  part.curves = cv;
  part.dminus = d;
  part.p_star = p;
  const SegmentEnds e = segment_ends(cv, geo, d, p, tol);
  part.a = e.a;
  part.b = std::max(e.b, e.a);
  part.c = e.c;
  std::vector<BoundaryCurve> parts;
  constexpr double eps = 1e-12;
  if (part.a > d.z1 + eps) parts.push_back(cv.top.restricted(d.z1, part.a));
  if (part.b > part.a + eps) parts.push_back(BoundaryCurve::line({part.a, p - part.a}, {part.b, p - part.b}));
  if (part.c > part.b + eps) parts.push_back(cv.right.restricted(part.b, part.c));
  part.s = BoundaryCurve::concat(parts, true);
  const double defect = part.s.concavity_defect(1000);
  if (defect > 1e-8) throw NonConcaveAssembly("assemble_partition: concavity defect " + std::to_string(defect));
  return part;
}

inline double zero_set_mass(const TransformField& field, const BoundaryCurve& s, const Tolerance& tol) {
  return field.mass(Which::NU, below_curve(s, support_box(field, tol)), tol);
}

inline CanonicalPartition find_critical_price(const TransformField& field, const BoundaryCurves& cv,
                                              const Tolerance& tol = {}) {
  const Point d = field.dminus();
  ZeroSetGeometry geo = zero_set_geometry(cv, d);
  limit_to_crossing(cv, geo, d, tol);
  auto g = [&](double p) { return zero_set_mass(field, assemble_partition(cv, geo, d, p, tol).s, tol) - 1.0; };
  const double lo = d.z1 + d.z2 + 1e-9 * std::max(1.0, geo.p_max);
  if (g(geo.p_max) < 0) throw NoSolution("find_critical_price: zero-set mass stays below 1");
  const double p = find_root(g, lo, geo.p_max, tol);
  return assemble_partition(cv, geo, d, p, tol);
}

struct WellFormednessCheck {
  std::string name;
  double residual = 0.0;
  bool passed = false;
};

struct WellFormednessReport {
  std::vector<WellFormednessCheck> checks;
  CertReport dominance;
  double threshold = 0.0;

  bool ok() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
  const WellFormednessCheck& at(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return c;
    throw InvalidParameter("no well-formedness check named " + name);
  }
};

// Dominance problem on the region where the bundle is sold: the box above
// s(b) and right of a, minus the triangle under the 45-degree segment.
inline DominanceProblem bundle_region_problem(const TransformField& field, const CanonicalPartition& part,
                                              const Tolerance& tol) {
  const Box box = support_box(field, tol);
  DominanceProblem dp = bundle_dominance_problem(field, part.p_star, tol);
  dp.C = {part.a, box.x1, part.s(part.b), box.y1};
  const double b = std::max(part.b, part.a + 1e-9);
  dp.r = BoundaryCurve::line({part.a, part.p_star - part.a}, {b, part.p_star - b});
  return dp;
}

inline WellFormednessReport verify_well_formed(const TransformField& field, const CanonicalPartition& part,
                                               const Tolerance& tol = {}, int probes = 200) {
  WellFormednessReport rep;
  rep.threshold = 100.0 * tol.abs_tol;
  const double thr = rep.threshold;
  const auto& s = part.s;
  const Box box = support_box(field, tol);

  // 1. The zero set lies in Y: X is increasing, so probing its outer edge suffices.
  const Extremum e = maximize_1d([&](double x) { return field.eta(x, s(x)); }, s.lo(), s.hi(), 2 * probes);
  rep.checks.push_back({"zero_set_in_y", -e.value, -e.value >= -thr});

  // 2. Unit nu-mass on the zero set.
  const double mres = zero_set_mass(field, s, tol) - 1.0;
  rep.checks.push_back({"zero_set_mass", mres, std::fabs(mres) <= thr});

  // 3. Vertical lines through the left strip carry zero net mass.
  const Tolerance lt{tol.abs_tol / 10.0, tol.rel_tol, tol.max_depth};
  double vmax = 0.0;
  if (part.a > s.lo())
    for (int i = 0; i <= probes; ++i) {
      const double z1 = s.lo() + (part.a - s.lo()) * i / probes;
      const double v = integrate_1d([&](double t) { return field.phi(z1, t); }, s(z1), box.y1, lt);
      vmax = std::max(vmax, std::fabs(v));
    }
  rep.checks.push_back({"vertical_lines", vmax, vmax <= thr});

  // 4. Horizontal lines through the bottom strip.
  double hmax = 0.0;
  const double yb = s(part.b);
  if (yb > box.y0)
    for (int i = 0; i <= probes; ++i) {
      const double z2 = box.y0 + (yb - box.y0) * i / probes;
      const double x = s.inverse(z2);
      const double v = integrate_1d([&](double t) { return field.phi(t, z2); }, x, box.x1, lt);
      hmax = std::max(hmax, std::fabs(v));
    }
  rep.checks.push_back({"horizontal_lines", hmax, hmax <= thr});

  // 5. Dominance on the bundle region.
  rep.dominance = check_region_dominance(bundle_region_problem(field, part, tol), tol, probes);
  const CertReport& dr = rep.dominance;
  rep.checks.push_back({"dominance", std::max({-dr.total, dr.line_max, dr.eta_violation}), dr.passed()});
  return rep;
}

inline Mechanism synthesize_mechanism(const CanonicalPartition& part) {
  const auto& s = part.s;
  constexpr double eps = 1e-9;
  for (const auto& k : s.knots()) {
    if (k.z1 < part.a) {
      const double q1 = -s.slope_right(k.z1);
      if (q1 < -eps || q1 > 1 + eps) throw SlopeOutOfRange("synthesize_mechanism: left-strip slope outside [-1,0]");
    } else if (k.z1 > part.b) {
      const double sl = s.slope_left(k.z1);
      if (sl > -1 + eps) throw SlopeOutOfRange("synthesize_mechanism: bottom-strip slope above -1");
    }
  }
  return Mechanism::from_partition({s, part.a, part.b, part.c, part.p_star});
}

}  // namespace mechopt
