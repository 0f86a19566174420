#pragma once

// Line-integral numerators for the power-law (6,7) bundle region. Along a ray
// from the 45-degree line the outward integral of phi factors as
//   f_j(z_j) (c_i - 1) N(z_j) / ((1 + p - z_j)^{c_i} (1 + z_j)),
// so the numerator N is recovered from the library's outward integral.

#include <cmath>

#include "mechopt/bundling.hpp"

namespace numerators {

struct Peak {
  double at = 0.0;
  double value = 0.0;
};

// axis 0 integrates over z1 from (p - z2, z2); axis 1 over z2 from (z1, p - z1).
inline double numerator(const mechopt::DominanceProblem& dp, const mechopt::TransformField& f, double p, int axis,
                        double fixed, const mechopt::Tolerance& tol) {
  const double c_moving = axis == 0 ? 6.0 : 7.0;
  const mechopt::Point start = axis == 0 ? mechopt::Point{p - fixed, fixed} : mechopt::Point{fixed, p - fixed};
  const double line = mechopt::outward_line_integral(dp, start, axis, tol);
  const double other_pdf = f.item(axis == 0 ? 1 : 0).pdf(fixed);
  return line / (other_pdf * (c_moving - 1)) * std::pow(1 + p - fixed, c_moving) * (1 + fixed);
}

inline Peak max_numerator(const mechopt::TransformField& f, double p, int axis, const mechopt::Tolerance& tol) {
  const mechopt::DominanceProblem dp = mechopt::bundle_dominance_problem(f, p, tol);
  const auto e = mechopt::maximize_1d([&](double t) { return numerator(dp, f, p, axis, t, tol); }, 0.0, p, 200);
  return {e.x, e.value};
}

}  // namespace numerators
