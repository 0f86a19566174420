#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "mechopt/errors.hpp"

namespace mechopt {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Tolerance {
  double abs_tol = 1e-9;
  double rel_tol = 1e-9;
  int max_depth = 60;

  void validate() const {
    if (!(abs_tol > 0) || !(rel_tol > 0) || max_depth < 1)
      throw InvalidParameter("tolerance needs abs_tol > 0, rel_tol > 0, max_depth >= 1");
  }
  Tolerance with_abs(double a) const { return {a, rel_tol, max_depth}; }
};

using Fn1 = std::function<double(double)>;
using Fn2 = std::function<double(double, double)>;

namespace detail {

struct Panel {
  double a, b;
  double value, error;
  int depth;
  bool mapped;  // lives in t-space of the semi-infinite substitution
  bool operator<(const Panel& o) const { return error < o.error; }
};

// G7/K15 on [a,b]; the error estimate is |K15 - G7|.
template <class F>
Panel gk15(const F& f, double a, double b, int depth, bool mapped) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  using G = boost::math::quadrature::gauss<double, 7>;
  const auto& xk = GK::abscissa();
  const auto& wk = GK::weights();
  const auto& wg = G::weights();
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(mid);
  double kron = fc * wk[0];
  double gauss = fc * wg[0];
  for (std::size_t i = 1; i < xk.size(); ++i) {
    const double dx = half * xk[i];
    const double s = f(mid + dx) + f(mid - dx);
    kron += s * wk[i];
    if (i % 2 == 0) gauss += s * wg[i / 2];
  }
  kron *= half;
  gauss *= half;
  if (!std::isfinite(kron)) throw NonConvergence("quadrature: integrand is not finite");
  return {a, b, kron, std::fabs(kron - gauss), depth, mapped};
}

}  // namespace detail

// Global adaptive Gauss-Kronrod over consecutive intervals of `pts`.
// The last point may be +inf; that piece is mapped by x = x0 + t/(1-t).
inline double integrate_1d(const Fn1& f, const std::vector<double>& pts, const Tolerance& tol) {
  tol.validate();
  if (pts.size() < 2) throw InvalidInterval("integrate_1d: need at least two points");
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (!(pts[i - 1] < pts[i])) throw InvalidInterval("integrate_1d: requires a < b");
  if (!std::isfinite(pts.front())) throw InvalidInterval("integrate_1d: lower limit must be finite");

  const bool infinite = std::isinf(pts.back());
  const double x0 = infinite ? pts[pts.size() - 2] : 0.0;
  auto tail = [&](double t) {
    const double om = 1.0 - t;
    return f(x0 + t / om) / (om * om);
  };
  auto panel = [&](double a, double b, int depth, bool mapped) {
    return mapped ? detail::gk15(tail, a, b, depth, true) : detail::gk15(f, a, b, depth, false);
  };

  std::priority_queue<detail::Panel> heap;
  double total = 0.0, err = 0.0;
  auto push = [&](const detail::Panel& p) {
    total += p.value;
    err += p.error;
    heap.push(p);
  };
  const std::size_t finite_pieces = pts.size() - (infinite ? 2 : 1);
  for (std::size_t i = 0; i < finite_pieces; ++i) push(panel(pts[i], pts[i + 1], 0, false));
  if (infinite) push(panel(0.0, 1.0, 0, true));

  constexpr std::size_t kMaxPanels = 1u << 14;
  std::size_t count = heap.size();
  auto target = [&] { return std::max(tol.abs_tol, tol.rel_tol * std::fabs(total)); };
  while (!heap.empty() && err > target()) {
    const detail::Panel p = heap.top();
    heap.pop();
    // Panels at the depth cap keep their error in the running sum.
    if (p.depth >= tol.max_depth || count >= kMaxPanels) continue;
    total -= p.value;
    err -= p.error;
    const double m = 0.5 * (p.a + p.b);
    push(panel(p.a, m, p.depth + 1, p.mapped));
    push(panel(m, p.b, p.depth + 1, p.mapped));
    ++count;
  }
  if (err > target())
    throw NonConvergence("integrate_1d: error estimate " + std::to_string(err) + " above target " +
                         std::to_string(target()));
  return total;
}

inline double integrate_1d(const Fn1& f, double a, double b, const Tolerance& tol) {
  return integrate_1d(f, std::vector<double>{a, b}, tol);
}

// Region for iterated integration: z1 in [x0,x1], z2 in [lower(z1), upper(z1)].
// Empty inner ranges contribute zero, so intersections can be expressed by
// clamping the limit functions.
struct Slab {
  double x0 = 0.0, x1 = 0.0;
  Fn1 lower, upper;
  std::vector<double> breaks;  // interior z1 where a limit function has a kink
};
using Region = std::vector<Slab>;

// Extra inner breakpoints for a fixed z1, e.g. sign changes of the integrand.
using InnerBreaks = std::function<void(double z1, double lo, double hi, std::vector<double>& out)>;

inline Slab box_slab(double x0, double x1, double y0, double y1) {
  return {x0, x1, [y0](double) { return y0; }, [y1](double) { return y1; }, {}};
}

inline constexpr int kOuterSplit = 8;

inline double integrate_2d(const Fn2& f, const Region& region, const Tolerance& tol,
                           const InnerBreaks& inner_breaks = {}) {
  tol.validate();
  double width = 0.0;
  for (const auto& s : region)
    if (s.x1 > s.x0) width += s.x1 - s.x0;
  const Tolerance inner{tol.abs_tol / (10.0 * std::max(1.0, width)), tol.rel_tol / 10.0, tol.max_depth};
  double total = 0.0;
  std::vector<double> pts;
  for (const auto& s : region) {
    if (!(s.x1 > s.x0)) continue;
    if (!std::isfinite(s.x0) || !std::isfinite(s.x1))
      throw InvalidInterval("integrate_2d: outer limits must be finite");
    auto row = [&](double z1) {
      const double lo = s.lower(z1), hi = s.upper(z1);
      if (std::isnan(lo) || std::isnan(hi))
        throw CurveDomainMismatch("integrate_2d: limit function undefined at z1=" + std::to_string(z1));
      if (!(hi > lo)) return 0.0;
      pts.clear();
      pts.push_back(lo);
      if (inner_breaks) inner_breaks(z1, lo, hi, pts);
      pts.push_back(hi);
      std::sort(pts.begin() + 1, pts.end() - 1);
      std::vector<double> clean;
      clean.reserve(pts.size());
      for (double p : pts) {
        if (p < lo || p > hi) continue;
        if (!clean.empty() && !(p > clean.back())) continue;
        clean.push_back(p);
      }
      if (clean.back() < hi) clean.push_back(hi);
      if (clean.size() < 2) return 0.0;
      return integrate_1d([&](double z2) { return f(z1, z2); }, clean, inner);
    };
    std::vector<double> cuts{s.x0};
    for (double b : s.breaks)
      if (b > s.x0 && b < s.x1) cuts.push_back(b);
    cuts.push_back(s.x1);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    // Truncated heavy tails make pieces long; quadratic spacing keeps a
    // feature near the left end from falling between the first nodes.
    std::vector<double> outer{cuts.front()};
    for (std::size_t i = 1; i < cuts.size(); ++i) {
      const double a = cuts[i - 1], len = cuts[i] - a;
      for (int k = 1; k < kOuterSplit; ++k) {
        const double t = static_cast<double>(k) / kOuterSplit;
        const double x = a + len * t * t;
        if (x > outer.back() && x < cuts[i]) outer.push_back(x);
      }
      if (cuts[i] > outer.back()) outer.push_back(cuts[i]);
    }
    total += integrate_1d(row, outer, tol);
  }
  return total;
}

// Bracketed root of g on [lo,hi] via TOMS 748; the returned point is the
// midpoint of a final bracket no wider than tol.abs_tol.
inline double find_root(const Fn1& g, double lo, double hi, const Tolerance& tol) {
  tol.validate();
  if (!(lo <= hi)) throw InvalidInterval("find_root: requires lo <= hi");
  const double glo = g(lo), ghi = g(hi);
  if (glo == 0.0) return lo;
  if (ghi == 0.0) return hi;
  if (std::isnan(glo) || std::isnan(ghi) || glo * ghi > 0.0)
    throw NoSignChange("find_root: no sign change on [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  const std::uintmax_t cap = 64 + 4 * static_cast<std::uintmax_t>(tol.max_depth);
  std::uintmax_t iters = cap;
  auto done = [&](double a, double b) {
    return std::fabs(b - a) <= std::max(tol.abs_tol, 4.0 * std::numeric_limits<double>::epsilon() * std::fabs(a));
  };
  const auto r = boost::math::tools::toms748_solve(g, lo, hi, glo, ghi, done, iters);
  if (iters >= cap && !done(r.first, r.second)) throw NonConvergence("find_root: iteration cap reached");
  return 0.5 * (r.first + r.second);
}

struct Extremum {
  double x;
  double value;
};

// Global maximum of f on [lo,hi]: best point of a uniform probe grid, then
// Brent refinement inside the neighbouring cells.
inline Extremum maximize_1d(const Fn1& f, double lo, double hi, int probes = 64) {
  if (!(lo <= hi)) throw InvalidInterval("maximize_1d: requires lo <= hi");
  if (lo == hi) return {lo, f(lo)};
  probes = std::max(probes, 2);
  const double h = (hi - lo) / probes;
  int best = 0;
  double best_v = -kInf;
  for (int i = 0; i <= probes; ++i) {
    const double v = f(lo + i * h);
    if (v > best_v) {
      best_v = v;
      best = i;
    }
  }
  const double a = lo + std::max(best - 1, 0) * h;
  const double b = lo + std::min(best + 1, probes) * h;
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::brent_find_minima([&](double x) { return -f(x); }, a, b,
                                                       std::numeric_limits<double>::digits / 2, iters);
  if (-r.second >= best_v) return {r.first, -r.second};
  return {lo + best * h, best_v};
}

}  // namespace mechopt
