#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mechopt/boundary_curve.hpp"
#include "mechopt/distributions.hpp"
#include "mechopt/errors.hpp"
#include "mechopt/numerics.hpp"

namespace mechopt {

enum class RegionLabel { X, Y, DMINUS };
enum class Which { MU, NU };

inline const char* to_string(RegionLabel l) {
  switch (l) {
    case RegionLabel::X: return "X";
    case RegionLabel::Y: return "Y";
    case RegionLabel::DMINUS: return "DMINUS";
  }
  return "?";
}

// Signed density phi(z) = -grad f(z).z - 3 f(z) of a two-item instance,
// together with the unit atom at the lower corner of the support.
class TransformField {
 public:
  explicit TransformField(Instance inst) : inst_(std::move(inst)) {}

  const Instance& instance() const { return inst_; }
  const ItemDistribution& item(int i) const { return inst_.items[i]; }
  double atom() const { return 1.0; }
  Point dminus() const { return inst_.dminus(); }

  double phi(double z1, double z2) const {
    check(z1, z2);
    const auto& a = inst_.items[0];
    const auto& b = inst_.items[1];
    const double f1 = a.pdf(z1), f2 = b.pdf(z2);
    return -z1 * a.dpdf(z1) * f2 - z2 * f1 * b.dpdf(z2) - 3.0 * f1 * f2;
  }

  // phi / f, which has the sign of phi wherever f > 0 and is finite on the
  // lower edges of the support.
  double eta(double z1, double z2) const { return x_expression(z1, z2) - 3.0; }

  // -e1(z1) - e2(z2) with e(z) = z f'(z)/f(z); the point lies in X iff this exceeds 3.
  double x_expression(double z1, double z2) const {
    check(z1, z2);
    return -inst_.items[0].elasticity(z1) - inst_.items[1].elasticity(z2);
  }

  RegionLabel classify(double z1, double z2) const {
    check(z1, z2);
    const Point d = dminus();
    if (z1 == d.z1 && z2 == d.z2) return RegionLabel::DMINUS;
    const double f = inst_.density(z1, z2);
    const double v = f > 0.0 ? phi(z1, z2) : eta(z1, z2);
    return v > 0.0 ? RegionLabel::X : RegionLabel::Y;
  }

  // Upper integration limit per item for absolute tolerance abs_tol.
  double top(int i, double abs_tol, int moment = 0) const { return inst_.items[i].upper_limit(abs_tol, moment); }

  // Appends the z2 in (lo,hi) where eta(z1, .) changes sign.
  void sign_changes_z2(double z1, double lo, double hi, std::vector<double>& out) const {
    sign_changes([&](double t) { return eta(z1, t); }, lo, hi, out);
  }
  void sign_changes_z1(double z2, double lo, double hi, std::vector<double>& out) const {
    sign_changes([&](double t) { return eta(t, z2); }, lo, hi, out);
  }

  // Mass of mu (positive part of phi) or nu (negative part) over a region.
  double mass(Which which, const Region& region, const Tolerance& tol) const {
    const double sgn = which == Which::MU ? 1.0 : -1.0;
    auto f = [this, sgn](double z1, double z2) { return std::max(sgn * phi(z1, z2), 0.0); };
    auto breaks = [this](double z1, double lo, double hi, std::vector<double>& out) {
      sign_changes_z2(z1, lo, hi, out);
    };
    return integrate_2d(f, region, tol, breaks);
  }

  double integral(const Fn2& g, const Region& region, const Tolerance& tol) const {
    auto breaks = [this](double z1, double lo, double hi, std::vector<double>& out) {
      sign_changes_z2(z1, lo, hi, out);
    };
    return integrate_2d(g, region, tol, breaks);
  }

  // Support box truncated for quadrature.
  Region support_region(const Tolerance& tol, int moment = 0) const {
    const Point d = dminus();
    return {box_slab(d.z1, top(0, tol.abs_tol, moment), d.z2, top(1, tol.abs_tol, moment))};
  }

 private:
  Instance inst_;

  void check(double z1, double z2) const {
    if (!inst_.in_support(z1, z2))
      throw OutOfSupport("point (" + std::to_string(z1) + ", " + std::to_string(z2) + ") outside the support");
  }

  template <class F>
  static void sign_changes(const F& g, double lo, double hi, std::vector<double>& out) {
    constexpr int n = 24;
    double prev_x = lo, prev = g(lo);
    for (int i = 1; i <= n; ++i) {
      // Geometric spacing resolves structure near the lower edge of long ranges.
      const double t = static_cast<double>(i) / n;
      const double x = i == n ? hi : lo + (hi - lo) * t * t;
      double v;
      try {
        v = g(x);
      } catch (const OutOfSupport&) {
        v = g(std::nextafter(x, lo));
      }
      if ((prev < 0.0) != (v < 0.0) && prev != 0.0 && v != 0.0) {
        try {
          out.push_back(find_root(g, prev_x, i == n ? std::nextafter(hi, lo) : x, Tolerance{1e-14, 1e-14, 60}));
        } catch (const NoSignChange&) {
        }
      }
      prev_x = x;
      prev = v;
    }
  }
};

// Region constructors over a support box [x0,x1] x [y0,y1].
struct Box {
  double x0, x1, y0, y1;
};

inline Box support_box(const TransformField& field, const Tolerance& tol, int moment = 0) {
  const Point d = field.dminus();
  return {d.z1, field.top(0, tol.abs_tol, moment), d.z2, field.top(1, tol.abs_tol, moment)};
}

inline Region box_region(const Box& b) { return {box_slab(b.x0, b.x1, b.y0, b.y1)}; }

// {z in box : z1 + z2 <= p}
inline Region below_line(double p, const Box& b) {
  const double xe = std::min(b.x1, p - b.y0);
  if (!(xe > b.x0)) return {};
  Slab s{b.x0, xe, [y0 = b.y0](double) { return y0; },
         [p, y1 = b.y1](double z1) { return std::min(y1, p - z1); }, {p - b.y1}};
  return {s};
}

// {z in box : z1 + z2 >= p}
inline Region above_line(double p, const Box& b) {
  Slab s{b.x0, b.x1, [p, y0 = b.y0](double z1) { return std::max(y0, p - z1); },
         [y1 = b.y1](double) { return y1; }, {p - b.y1, p - b.y0}};
  return {s};
}

// {z in box : z1 + z2 <= p and l1 z1 + l2 z2 <= k}
inline Region below_two_lines(double p, double l1, double l2, double k, const Box& b) {
  const double xe = std::min({b.x1, p - b.y0, (k - l2 * b.y0) / l1});
  if (!(xe > b.x0)) return {};
  const double cross = std::fabs(l1 - l2) > 0 ? (k - l2 * p) / (l1 - l2) : b.x0;
  Slab s{b.x0, xe, [y0 = b.y0](double) { return y0; },
         [=](double z1) { return std::min({b.y1, p - z1, (k - l1 * z1) / l2}); },
         {cross, p - b.y1, (k - l2 * b.y1) / l1}};
  return {s};
}

// {z in box : z1 in curve domain, z2 <= s(z1)}
inline Region below_curve(const BoundaryCurve& s, const Box& b) {
  const double xa = std::max(b.x0, s.lo()), xe = std::min(b.x1, s.hi());
  if (!(xe > xa)) return {};
  std::vector<double> br = s.junctions();
  const double top = s(s.lo()), bottom = s(s.hi());
  if (b.y1 < top && b.y1 > bottom) br.push_back(s.inverse(b.y1));
  if (b.y0 < top && b.y0 > bottom) br.push_back(s.inverse(b.y0));
  Slab sl{xa, xe, [y0 = b.y0](double) { return y0; },
          [s, y1 = b.y1](double z1) { return std::min(y1, s(z1)); }, br};
  return {sl};
}

// Complement in the box of {z1 <= s.hi, z2 <= s(z1)}: above the curve over its
// domain and full columns to its right.
inline Region above_curve(const BoundaryCurve& s, const Box& b) {
  Region r;
  const double xa = std::max(b.x0, s.lo()), xe = std::min(b.x1, s.hi());
  if (xe > xa) {
    std::vector<double> br = s.junctions();
    const double top = s(s.lo()), bottom = s(s.hi());
    if (b.y1 < top && b.y1 > bottom) br.push_back(s.inverse(b.y1));
    if (b.y0 < top && b.y0 > bottom) br.push_back(s.inverse(b.y0));
    r.push_back({xa, xe, [s, y0 = b.y0](double z1) { return std::max(y0, s(z1)); },
                 [y1 = b.y1](double) { return y1; }, br});
  }
  if (b.x1 > std::max(b.x0, s.hi())) r.push_back(box_slab(std::max(b.x0, s.hi()), b.x1, b.y0, b.y1));
  return r;
}

// nu(Y) - mu(X) over the truncated support; equals the atom mass 1 for a valid instance.
inline double check_mass_identity(const TransformField& field, const Tolerance& tol = {}) {
  const Region all = field.support_region(tol);
  return field.mass(Which::NU, all, tol) - field.mass(Which::MU, all, tol);
}

}  // namespace mechopt
