#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "mechopt/dominance.hpp"
#include "mechopt/errors.hpp"
#include "mechopt/measures.hpp"
#include "mechopt/numerics.hpp"

namespace mechopt {

// Built-in families have increasing -z f'/f, so eta is increasing.
inline bool has_increasing_eta(const Instance& inst) {
  for (const auto& d : inst.items)
    if (d.family != "exponential" && d.family != "powerlaw" && d.family != "beta") return false;
  return true;
}

// Returns the nu-mass of {z1 + z2 <= p}.
inline double bundle_zero_mass(const TransformField& field, double p, const Tolerance& tol) {
  return field.mass(Which::NU, below_line(p, support_box(field, tol)), tol);
}

// Price at which the region below the 45-degree line carries unit nu-mass.
inline double critical_bundle_price(const TransformField& field, const Tolerance& tol = {}) {
  const Box box = support_box(field, tol);
  const double lo = box.x0 + box.y0;
  const double hi = box.x1 + box.y1;
  auto g = [&](double p) { return bundle_zero_mass(field, p, tol) - 1.0; };
  const double scale = field.item(0).quantile(0.5) + field.item(1).quantile(0.5);
  double prev_p = lo, prev = -1.0, p = lo + 0.125 * scale;
  while (true) {
    p = std::min(p, hi);
    const double v = g(p);
    if (v < prev - 100 * tol.abs_tol) throw NonConvergence("critical_bundle_price: zero-set mass decreased");
    if (v >= 0) return find_root(g, prev_p, p, tol);
    if (p >= hi) throw NoSolution("critical_bundle_price: zero-set mass stays below 1");
    prev_p = p;
    prev = v;
    p = lo + 2.0 * (p - lo);
  }
}

struct BundleCertificate {
  double p_star = 0.0;
  double line_max = 0.0;        // max of -e1 - e2 on z1 + z2 = p*
  double line_argmax = 0.0;     // its z1
  double z_subset_y_margin = 0.0;
  double mass_residual = 0.0;
  double threshold = 0.0;
  CertReport dominance;
  std::string scope = "two items";

  bool valid() const { return z_subset_y_margin >= 0 && mass_residual <= threshold && dominance.passed(); }
};

// Dominance problem on the complement of {z1 + z2 <= p} in the support box.
inline DominanceProblem bundle_dominance_problem(const TransformField& field, double p, const Tolerance& tol) {
  const Box box = support_box(field, tol);
  const double x_end = std::min(box.x1, p - box.y0);
  const double x_start = std::max(box.x0, p - box.y1);
  DominanceProblem dp;
  dp.C = box;
  dp.r = BoundaryCurve::line({x_start, p - x_start}, {x_end, p - x_end});
  dp.g = [&field](double z1, double z2) { return std::max(field.phi(z1, z2), 0.0); };
  dp.h = [&field](double z1, double z2) { return std::max(-field.phi(z1, z2), 0.0); };
  dp.alpha = field.item(0).pdf;
  dp.beta = field.item(1).pdf;
  dp.eta = [&field](double z1, double z2) { return field.eta(z1, z2); };
  dp.eta_increasing = has_increasing_eta(field.instance());
  dp.kinks = [&field](double z1, double lo, double hi, std::vector<double>& out) {
    field.sign_changes_z2(z1, lo, hi, out);
  };
  return dp;
}

inline BundleCertificate certify_grand_bundle(const TransformField& field, double p_star, const Tolerance& tol = {},
                                              int probe_count = 200) {
  BundleCertificate cert;
  cert.p_star = p_star;
  cert.threshold = 100.0 * tol.abs_tol;
  const Box box = support_box(field, tol);
  const double lo = std::max(box.x0, p_star - box.y1);
  const double hi = std::min(std::nextafter(box.x1, box.x0), p_star - box.y0);
  // X is increasing, so Z lies in Y iff its outer edge does.
  const Extremum e = maximize_1d([&](double z1) { return field.x_expression(z1, p_star - z1); }, lo, hi, 256);
  cert.line_max = e.value;
  cert.line_argmax = e.x;
  cert.z_subset_y_margin = 3.0 - e.value;
  cert.mass_residual = std::fabs(bundle_zero_mass(field, p_star, tol) - 1.0);
  cert.dominance = check_region_dominance(bundle_dominance_problem(field, p_star, tol), tol, probe_count);
  return cert;
}

}  // namespace mechopt
