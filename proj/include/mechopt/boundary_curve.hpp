#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

// pchip.hpp in Boost 1.74 calls isnan unqualified; declare it first.
#include <boost/math/special_functions/fpclassify.hpp>
#include <boost/math/interpolators/cubic_hermite.hpp>
#include <boost/math/interpolators/pchip.hpp>

#include "mechopt/errors.hpp"
#include "mechopt/numerics.hpp"

namespace mechopt {

struct Point {
  double z1 = 0.0, z2 = 0.0;
};

// Decreasing planar curve z2 = s(z1) on [lo, hi], stored as consecutive
// pieces so that one-sided slopes exist at junctions.
class BoundaryCurve {
 public:
  BoundaryCurve() = default;

  static BoundaryCurve line(Point a, Point b) {
    if (!(a.z1 < b.z1)) throw InvalidParameter("BoundaryCurve::line: z1 must increase");
    if (b.z2 > a.z2) throw InvalidParameter("BoundaryCurve::line: curve must be non-increasing");
    const double m = (b.z2 - a.z2) / (b.z1 - a.z1);
    Piece p;
    p.lo = a.z1;
    p.hi = b.z1;
    p.value = [a, m](double x) { return a.z2 + m * (x - a.z1); };
    p.slope = [m](double) { return m; };
    p.knots = {a, b};
    BoundaryCurve c;
    c.pieces_.push_back(std::move(p));
    return c;
  }

  // Shape-preserving monotone cubic (Fritsch-Butland weights) through samples.
  static BoundaryCurve interpolate(std::vector<Point> pts, bool concave = false) {
    check_samples(pts);
    if (pts.size() < 4) return polyline(pts, concave);
    std::vector<double> x, y;
    for (const auto& p : pts) {
      x.push_back(p.z1);
      y.push_back(p.z2);
    }
    auto ip = std::make_shared<boost::math::interpolators::pchip<std::vector<double>>>(std::move(x), std::move(y));
    return single(pts, [ip](double t) { return (*ip)(t); }, [ip](double t) { return ip->prime(t); }, concave);
  }

  // Cubic Hermite through samples with known slopes dz2/dz1.
  static BoundaryCurve hermite(std::vector<Point> pts, std::vector<double> slopes, bool concave = false) {
    check_samples(pts);
    if (slopes.size() != pts.size()) throw InvalidParameter("BoundaryCurve::hermite: slope count mismatch");
    if (pts.size() < 2) throw InvalidParameter("BoundaryCurve::hermite: need two samples");
    std::vector<double> x, y;
    for (const auto& p : pts) {
      x.push_back(p.z1);
      y.push_back(p.z2);
    }
    auto ip = std::make_shared<boost::math::interpolators::cubic_hermite<std::vector<double>>>(
        std::move(x), std::move(y), std::move(slopes));
    return single(pts, [ip](double t) { return (*ip)(t); }, [ip](double t) { return ip->prime(t); }, concave);
  }

  // Joins curves end to end; consecutive parts must meet within join_tol.
  static BoundaryCurve concat(const std::vector<BoundaryCurve>& parts, bool concave, double join_tol = 1e-6) {
    BoundaryCurve c;
    c.concave_ = concave;
    for (const auto& part : parts) {
      if (part.pieces_.empty()) continue;
      if (!c.pieces_.empty()) {
        const double x = c.hi();
        if (std::fabs(part.lo() - x) > join_tol || std::fabs(part(part.lo()) - c(x)) > join_tol)
          throw MalformedRegion("BoundaryCurve::concat: parts do not meet at z1=" + std::to_string(x));
      }
      for (const auto& p : part.pieces_) c.pieces_.push_back(p);
    }
    if (c.pieces_.empty()) throw InvalidParameter("BoundaryCurve::concat: no parts");
    return c;
  }

  BoundaryCurve restricted(double lo, double hi) const {
    if (!(lo < hi) || lo < this->lo() - 1e-12 || hi > this->hi() + 1e-12)
      throw CurveDomainMismatch("BoundaryCurve::restricted: range outside domain");
    BoundaryCurve c;
    c.concave_ = concave_;
    for (auto p : pieces_) {
      if (p.hi <= lo || p.lo >= hi) continue;
      p.lo = std::max(p.lo, lo);
      p.hi = std::min(p.hi, hi);
      c.pieces_.push_back(std::move(p));
    }
    return c;
  }

  bool empty() const { return pieces_.empty(); }
  double lo() const { return pieces_.front().lo; }
  double hi() const { return pieces_.back().hi; }
  bool concave() const { return concave_; }
  bool contains(double z1) const { return !empty() && z1 >= lo() && z1 <= hi(); }

  double operator()(double z1) const { return piece_at(z1, false).value(clamp(z1)); }

  double slope_left(double z1) const { return piece_at(z1, true).slope(clamp(z1)); }
  double slope_right(double z1) const { return piece_at(z1, false).slope(clamp(z1)); }

  // z1 with s(z1) = z2; on flat stretches the leftmost solution is returned.
  double inverse(double z2) const {
    const double top = (*this)(lo()), bottom = (*this)(hi());
    if (z2 > top + 1e-12 || z2 < bottom - 1e-12)
      throw CurveDomainMismatch("BoundaryCurve::inverse: z2=" + std::to_string(z2) + " outside range");
    if (z2 >= top) return lo();
    if (z2 <= bottom) return hi();
    for (const auto& p : pieces_) {
      const double a = p.value(p.lo), b = p.value(p.hi);
      if (z2 > a || z2 < b) continue;
      if (a == b) return p.lo;
      return find_root([&](double x) { return p.value(x) - z2; }, p.lo, p.hi, Tolerance{1e-14, 1e-14, 60});
    }
    return hi();
  }

  std::vector<Point> knots() const {
    std::vector<Point> out;
    for (const auto& p : pieces_)
      for (const auto& k : p.knots)
        if (k.z1 >= p.lo && k.z1 <= p.hi && (out.empty() || k.z1 > out.back().z1)) out.push_back(k);
    return out;
  }

  std::vector<double> junctions() const {
    std::vector<double> out;
    for (std::size_t i = 1; i < pieces_.size(); ++i) out.push_back(pieces_[i].lo);
    return out;
  }

  // Largest midpoint shortfall (s(x)+s(y))/2 - s((x+y)/2) over an n-point grid;
  // non-positive for a concave curve.
  double concavity_defect(int n = 1000) const {
    const double a = lo(), b = hi();
    double worst = -kInf;
    const int m = std::max(n, 4);
    for (int i = 0; i < m; ++i) {
      const double x = a + (b - a) * i / m;
      const double y = a + (b - a) * (i + 1.0 + (i % 7)) / m;
      if (y > b) continue;
      const double mid = 0.5 * (x + y);
      worst = std::max(worst, 0.5 * ((*this)(x) + (*this)(y)) - (*this)(mid));
    }
    return worst;
  }

 private:
  struct Piece {
    double lo = 0.0, hi = 0.0;
    std::function<double(double)> value, slope;
    std::vector<Point> knots;
  };
  std::vector<Piece> pieces_;
  bool concave_ = false;

  static void check_samples(const std::vector<Point>& pts) {
    for (std::size_t i = 1; i < pts.size(); ++i) {
      if (!(pts[i].z1 > pts[i - 1].z1))
        throw InvalidParameter("BoundaryCurve: z1 must be strictly increasing across samples");
      if (pts[i].z2 > pts[i - 1].z2)
        throw InvalidParameter("BoundaryCurve: z2 must be non-increasing across samples");
    }
  }

  static BoundaryCurve single(const std::vector<Point>& pts, std::function<double(double)> v,
                              std::function<double(double)> d, bool concave) {
    Piece p;
    p.lo = pts.front().z1;
    p.hi = pts.back().z1;
    p.value = std::move(v);
    p.slope = std::move(d);
    p.knots = pts;
    BoundaryCurve c;
    c.pieces_.push_back(std::move(p));
    c.concave_ = concave;
    return c;
  }

  static BoundaryCurve polyline(const std::vector<Point>& pts, bool concave) {
    if (pts.size() < 2) throw InvalidParameter("BoundaryCurve: need at least two samples");
    std::vector<BoundaryCurve> parts;
    for (std::size_t i = 1; i < pts.size(); ++i) parts.push_back(line(pts[i - 1], pts[i]));
    return concat(parts, concave);
  }

  double clamp(double z1) const { return std::clamp(z1, lo(), hi()); }

  const Piece& piece_at(double z1, bool left) const {
    if (pieces_.empty()) throw CurveDomainMismatch("BoundaryCurve: empty curve");
    if (z1 < lo() - 1e-12 || z1 > hi() + 1e-12)
      throw CurveDomainMismatch("BoundaryCurve: z1=" + std::to_string(z1) + " outside [" + std::to_string(lo()) +
                                ", " + std::to_string(hi()) + "]");
    auto it = std::lower_bound(pieces_.begin(), pieces_.end(), z1,
                               [](const Piece& p, double x) { return p.hi < x; });
    if (it == pieces_.end()) return pieces_.back();
    if (!left && z1 >= it->hi && std::next(it) != pieces_.end()) ++it;
    return *it;
  }
};

}  // namespace mechopt
