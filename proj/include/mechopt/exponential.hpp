#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "mechopt/errors.hpp"
#include "mechopt/measures.hpp"
#include "mechopt/mechanism.hpp"
#include "mechopt/numerics.hpp"

namespace mechopt {

struct ExponentialSolution {
  double lambda1 = 0.0, lambda2 = 0.0;  // lambda1 >= lambda2 after relabeling
  bool relabeled = false;               // input items were swapped
  double p_star = 0.0;
  bool pure_bundling = false;
  std::vector<MenuOption> menu;         // in the caller's item order

  Mechanism mechanism() const { return Mechanism::from_menu(menu); }
};

inline TransformField exponential_field(double l1, double l2) {
  return TransformField(Instance(exponential(l1), exponential(l2)));
}

// nu-mass of {z1 + z2 <= p, l1 z1 + l2 z2 <= 2}.
inline double zero_space_mass(const TransformField& field, double l1, double l2, double p, const Tolerance& tol) {
  return field.mass(Which::NU, below_two_lines(p, l1, l2, 2.0, support_box(field, tol)), tol);
}

inline ExponentialSolution solve_two_exponential(double l1, double l2, const Tolerance& tol = {}) {
  if (!(l1 > 0) || !(l2 > 0)) throw InvalidParameter("solve_two_exponential: rates must be > 0");
  ExponentialSolution sol;
  sol.relabeled = l1 < l2;
  if (sol.relabeled) std::swap(l1, l2);
  sol.lambda1 = l1;
  sol.lambda2 = l2;
  const TransformField field = exponential_field(l1, l2);
  // The mass is 0 at p = 0 and 1 + e^-2 once the line z1 + z2 = p clears the hyperplane.
  const double hi = 2.0 / l2;
  sol.p_star = find_root([&](double p) { return zero_space_mass(field, l1, l2, p, tol) - 1.0; }, 0.0, hi, tol);
  sol.pure_bundling = sol.p_star <= 2.0 / l1;

  sol.menu.push_back({});
  if (!sol.pure_bundling) {
    MenuOption mid{1.0, l2 / l1, 2.0 / l1};
    if (sol.relabeled) std::swap(mid.q1, mid.q2);
    sol.menu.push_back(mid);
  }
  sol.menu.push_back({1.0, 1.0, sol.p_star});
  return sol;
}

// Outward integral of the scaled transform density along z + tau v for
// exponential rates; zero for z on the hyperplane l.z = 2.
inline double absorption_residual(std::pair<double, double> lambda, Point z, Point v, const Tolerance& tol = {}) {
  const auto [l1, l2] = lambda;
  const double level = l1 * z.z1 + l2 * z.z2;
  if (std::fabs(level - 2.0) > 1e-9 * std::max(1.0, std::fabs(level)))
    throw NotOnHyperplane("absorption_residual: l.z = " + std::to_string(level));
  if (v.z1 < 0 || v.z2 < 0 || (v.z1 == 0 && v.z2 == 0))
    throw InvalidParameter("absorption_residual: direction must be nonnegative and nonzero");
  auto f = [&](double tau) {
    const double s = l1 * (z.z1 + tau * v.z1) + l2 * (z.z2 + tau * v.z2);
    return (3.0 - s) * std::exp(-s);
  };
  return integrate_1d(f, 0.0, kInf, tol);
}

}  // namespace mechopt
