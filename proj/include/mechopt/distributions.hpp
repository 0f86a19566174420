#pragma once

#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/factorials.hpp>

#include "mechopt/boundary_curve.hpp"
#include "mechopt/errors.hpp"
#include "mechopt/numerics.hpp"

namespace mechopt {

enum class TailKind { Exponential, Polynomial, Compact };

// Decay class of the density near an infinite upper end, used to choose
// quadrature truncation points. `rate` is lambda for Exponential and the
// power c of (1+z)^(-c) for Polynomial.
struct TailFamily {
  TailKind kind = TailKind::Compact;
  double rate = 0.0;
};

struct ItemDistribution {
  std::string family = "custom";
  std::vector<double> params;
  Fn1 pdf, dpdf;
  Fn1 cdf;              // optional; quadrature of pdf otherwise
  Fn1 elasticity_fn;    // optional z f'(z)/f(z) with its limits where f vanishes
  Fn1 quantile_fn;      // optional analytic inverse CDF
  double lo = 0.0, hi = kInf;
  TailFamily tail;

  bool in_support(double z) const { return z >= lo && z < hi; }

  // z f'(z) / f(z).
  double elasticity(double z) const {
    if (elasticity_fn) return elasticity_fn(z);
    const double f = pdf(z);
    if (f == 0.0) throw OutOfSupport("elasticity undefined where the density vanishes");
    return z * dpdf(z) / f;
  }

  double elasticity_slope(double z) const {
    const double h = 1e-6 * std::max(1.0, std::fabs(z));
    const double a = std::max(lo, z - h);
    const double b = std::isfinite(hi) ? std::min(hi - 1e-12, z + h) : z + h;
    return (elasticity(b) - elasticity(a)) / (b - a);
  }

  double cdf_at(double z) const {
    if (z <= lo) return 0.0;
    if (z >= hi) return 1.0;
    if (cdf) return cdf(z);
    return integrate_1d(pdf, lo, z, Tolerance{1e-13, 1e-12, 60});
  }

  // Mass above z.
  double survival(double z) const {
    if (z <= lo) return 1.0;
    if (z >= hi) return 0.0;
    if (cdf) return 1.0 - cdf(z);
    return integrate_1d(pdf, z, hi, Tolerance{1e-13, 1e-12, 60});
  }

  double quantile(double u) const {
    if (quantile_fn) return quantile_fn(u);
    if (u <= 0.0) return lo;
    const double top = std::isfinite(hi) ? hi : truncation(1e-14);
    return find_root([&](double z) { return cdf_at(z) - u; }, lo, top, Tolerance{1e-10, 1e-10, 60});
  }

  // Bound on the mass of z^k (|z f'| + 3 f) beyond T.
  double tail_bound(double T, int moment = 0) const {
    switch (tail.kind) {
      case TailKind::Compact:
        return T >= hi ? 0.0 : kInf;
      case TailKind::Exponential: {
        const double l = tail.rate;
        return std::pow(l * T + moment + 4.0, moment + 2.0) * std::exp(-l * T) / std::pow(l, moment);
      }
      case TailKind::Polynomial: {
        const double c = tail.rate;
        if (c <= moment + 1.0) return kInf;
        return (c + 3.0) * (c - 1.0) / (c - moment - 1.0) * std::pow(1.0 + T, moment + 1.0 - c);
      }
    }
    return kInf;
  }

  // Smallest T (up to doubling resolution) with tail_bound(T) <= eps.
  double truncation(double eps, int moment = 0) const {
    if (std::isfinite(hi)) return hi;
    double T = std::max(1.0, lo + 1.0);
    for (int i = 0; i < 200 && tail_bound(T, moment) > eps; ++i) T *= 1.25;
    if (tail_bound(T, moment) > eps) throw InvalidParameter("tail bound does not decay for " + family);
    return T;
  }

  // Upper integration limit for quadrature at absolute tolerance abs_tol.
  double upper_limit(double abs_tol, int moment = 0) const {
    return std::isfinite(hi) ? hi : truncation(abs_tol / 10.0, moment);
  }
};

inline ItemDistribution exponential(double lambda) {
  if (!(lambda > 0)) throw InvalidParameter("exponential: lambda must be > 0");
  ItemDistribution d;
  d.family = "exponential";
  d.params = {lambda};
  d.pdf = [lambda](double z) { return z < 0 ? 0.0 : lambda * std::exp(-lambda * z); };
  d.dpdf = [lambda](double z) { return z < 0 ? 0.0 : -lambda * lambda * std::exp(-lambda * z); };
  d.cdf = [lambda](double z) { return z <= 0 ? 0.0 : -std::expm1(-lambda * z); };
  d.elasticity_fn = [lambda](double z) { return -lambda * z; };
  d.quantile_fn = [lambda](double u) { return -std::log1p(-u) / lambda; };
  d.lo = 0.0;
  d.hi = kInf;
  d.tail = {TailKind::Exponential, lambda};
  return d;
}

inline ItemDistribution powerlaw(double c) {
  if (!(c > 2)) throw InvalidParameter("powerlaw: c must be > 2");
  ItemDistribution d;
  d.family = "powerlaw";
  d.params = {c};
  d.pdf = [c](double z) { return z < 0 ? 0.0 : (c - 1.0) * std::pow(1.0 + z, -c); };
  d.dpdf = [c](double z) { return z < 0 ? 0.0 : -c * (c - 1.0) * std::pow(1.0 + z, -c - 1.0); };
  d.cdf = [c](double z) { return z <= 0 ? 0.0 : 1.0 - std::pow(1.0 + z, 1.0 - c); };
  d.elasticity_fn = [c](double z) { return -c * z / (1.0 + z); };
  d.quantile_fn = [c](double u) { return std::pow(1.0 - u, 1.0 / (1.0 - c)) - 1.0; };
  d.lo = 0.0;
  d.hi = kInf;
  d.tail = {TailKind::Polynomial, c};
  return d;
}

inline ItemDistribution beta(double a, double b) {
  if (!(a > 1) || !(b > 1)) throw InvalidParameter("beta: shapes must be > 1");
  double norm;
  if (a == std::floor(a) && b == std::floor(b) && a + b < 170) {
    const auto fa = boost::math::factorial<double>(static_cast<unsigned>(a) - 1);
    const auto fb = boost::math::factorial<double>(static_cast<unsigned>(b) - 1);
    const auto fab = boost::math::factorial<double>(static_cast<unsigned>(a + b) - 1);
    norm = fa * fb / fab;
  } else {
    norm = integrate_1d([a, b](double z) { return std::pow(z, a - 1) * std::pow(1 - z, b - 1); }, 0.0, 1.0,
                        Tolerance{1e-15, 1e-14, 60});
  }
  ItemDistribution d;
  d.family = "beta";
  d.params = {a, b};
  d.pdf = [a, b, norm](double z) {
    if (z < 0 || z >= 1) return 0.0;
    return std::pow(z, a - 1) * std::pow(1 - z, b - 1) / norm;
  };
  d.dpdf = [a, b, norm](double z) {
    if (z < 0 || z >= 1) return 0.0;
    const double left = (a - 1) * std::pow(z, a - 2) * std::pow(1 - z, b - 1);
    const double right = (b - 1) * std::pow(z, a - 1) * std::pow(1 - z, b - 2);
    return (left - right) / norm;
  };
  d.cdf = [a, b](double z) {
    if (z <= 0) return 0.0;
    if (z >= 1) return 1.0;
    return boost::math::ibeta(a, b, z);
  };
  d.quantile_fn = [a, b](double u) {
    if (u <= 0) return 0.0;
    if (u >= 1) return std::nextafter(1.0, 0.0);
    return boost::math::ibeta_inv(a, b, u);
  };
  d.elasticity_fn = [a, b](double z) { return (a - 1) - (b - 1) * z / (1 - z); };
  d.lo = 0.0;
  d.hi = 1.0;
  d.tail = {TailKind::Compact, 0.0};
  return d;
}

inline ItemDistribution custom(Fn1 pdf, Fn1 dpdf, double lo, double hi, TailFamily tail) {
  if (!(lo >= 0) || !(hi > lo)) throw InvalidParameter("custom: support must satisfy 0 <= lo < hi");
  ItemDistribution d;
  d.pdf = std::move(pdf);
  d.dpdf = std::move(dpdf);
  d.lo = lo;
  d.hi = hi;
  d.tail = std::isfinite(hi) ? TailFamily{TailKind::Compact, 0.0} : tail;
  return d;
}

struct ValidationCheck {
  std::string name;
  bool passed = false;
  double residual = 0.0;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool ok() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
  const ValidationCheck& at(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return c;
    throw InvalidParameter("no validation check named " + name);
  }
};

// Points in the open support for sampling checks (golden-ratio sequence).
inline std::vector<double> support_probes(const ItemDistribution& d, int n, double margin) {
  const double top = std::isfinite(d.hi) ? d.hi : d.truncation(1e-8);
  const double a = d.lo + margin, b = top - margin;
  std::vector<double> out;
  out.reserve(n);
  double u = 0.5;
  for (int i = 0; i < n; ++i) {
    u = std::fmod(u + 0.6180339887498949, 1.0);
    out.push_back(a + (b - a) * u);
  }
  return out;
}

inline ValidationReport validate(const ItemDistribution& d, const Tolerance& tol = {}) {
  ValidationReport r;

  double worst_neg = 0.0;
  for (double z : support_probes(d, 1000, 1e-9)) worst_neg = std::min(worst_neg, d.pdf(z));
  r.checks.push_back({"nonnegative", worst_neg >= 0.0, -worst_neg});

  double mass = 0.0;
  bool integrable = true;
  try {
    const double top = d.upper_limit(tol.abs_tol);
    mass = integrate_1d(d.pdf, d.lo, top, Tolerance{tol.abs_tol / 10.0, tol.rel_tol / 10.0, tol.max_depth});
  } catch (const Error&) {
    integrable = false;
  }
  const double norm_res = integrable ? std::fabs(mass - 1.0) : kInf;
  r.checks.push_back({"normalization", norm_res <= 1e-8, norm_res});

  const double boundary = std::fabs(d.lo * d.pdf(d.lo));
  r.checks.push_back({"lower_boundary", boundary <= 1e-12, boundary});

  // z^2 f(z) along a sequence approaching the upper end must decay to zero.
  std::vector<double> seq;
  for (int k = 1; k <= 12; ++k) {
    const double z = std::isfinite(d.hi) ? d.hi - (d.hi - d.lo) * std::pow(10.0, -k) : std::pow(10.0, k);
    seq.push_back(z * z * d.pdf(z));
  }
  const std::size_t n = seq.size();
  const bool decaying = seq[n - 1] <= seq[n - 2] && seq[n - 2] <= seq[n - 3] && seq[n - 1] <= 1e-4;
  r.checks.push_back({"upper_tail", decaying, seq[n - 1]});

  const double h = 1e-5;
  double worst_fd = 0.0;
  for (double z : support_probes(d, 1000, 2 * h)) {
    const double fd = (d.pdf(z + h) - d.pdf(z - h)) / (2 * h);
    worst_fd = std::max(worst_fd, std::fabs(d.dpdf(z) - fd));
  }
  r.checks.push_back({"derivative", worst_fd <= 1e-5, worst_fd});
  return r;
}

struct Instance {
  std::array<ItemDistribution, 2> items;

  Instance() = default;
  Instance(ItemDistribution a, ItemDistribution b) : items{std::move(a), std::move(b)} {}

  const ItemDistribution& operator[](int i) const { return items[i]; }
  Point dminus() const { return {items[0].lo, items[1].lo}; }
  double density(double z1, double z2) const { return items[0].pdf(z1) * items[1].pdf(z2); }
  bool in_support(double z1, double z2) const { return items[0].in_support(z1) && items[1].in_support(z2); }
};

}  // namespace mechopt
