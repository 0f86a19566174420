#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "mechopt/boundary_curve.hpp"
#include "mechopt/distributions.hpp"
#include "mechopt/errors.hpp"
#include "mechopt/measures.hpp"
#include "mechopt/numerics.hpp"

namespace mechopt {

// Allocation probabilities and price.
struct MenuOption {
  double q1 = 0.0, q2 = 0.0, t = 0.0;

  double value(Point z) const { return z.z1 * q1 + z.z2 * q2 - t; }
  bool operator==(const MenuOption&) const = default;
};

// Zero: buys nothing. A: item 2 for sure plus a lottery on item 1.
// B: item 1 for sure plus a lottery on item 2. W: grand bundle.
enum class Zone { Menu, Zero, A, B, W };

inline const char* to_string(Zone z) {
  switch (z) {
    case Zone::Menu: return "menu";
    case Zone::Zero: return "Z";
    case Zone::A: return "A";
    case Zone::B: return "B";
    case Zone::W: return "W";
  }
  return "?";
}

struct Choice {
  double u = 0.0;
  MenuOption option;
  Zone zone = Zone::Menu;
  int index = -1;  // menu position, -1 for partition outcomes
};

// Partition-defined mechanism: nothing below the decreasing concave curve s,
// tangent-plane lotteries on the two strips, the bundle at `price` elsewhere.
struct PartitionRule {
  BoundaryCurve s;
  double a = 0.0, b = 0.0, c = 0.0, price = 0.0;
};

class Mechanism {
 public:
  static Mechanism from_menu(std::vector<MenuOption> options) {
    for (const auto& o : options)
      if (o.q1 < 0 || o.q1 > 1 || o.q2 < 0 || o.q2 > 1 || o.t < 0)
        throw InvalidParameter("Mechanism: option outside [0,1]^2 x [0,inf)");
    if (std::find(options.begin(), options.end(), MenuOption{}) == options.end())
      options.insert(options.begin(), MenuOption{});
    Mechanism m;
    m.options_ = std::move(options);
    return m;
  }

  static Mechanism from_partition(PartitionRule rule) {
    Mechanism m;
    m.rule_ = std::move(rule);
    m.partition_ = true;
    return m;
  }

  bool is_menu() const { return !partition_; }
  const std::vector<MenuOption>& options() const { return options_; }
  const PartitionRule& rule() const { return rule_; }

  Zone zone(Point z) const {
    if (!partition_) return Zone::Menu;
    const auto& r = rule_;
    if (z.z1 <= r.c && z.z1 >= r.s.lo() && z.z2 <= r.s(z.z1)) return Zone::Zero;
    if (z.z1 <= r.a) return Zone::A;
    if (z.z2 <= r.s(r.b)) return Zone::B;
    return Zone::W;
  }

  Choice choose(Point z) const {
    if (!partition_) return choose_menu(z);
    Choice ch;
    ch.zone = zone(z);
    ch.option = outcome(z, ch.zone);
    ch.u = ch.option.value(z);
    if (ch.zone == Zone::Zero) ch.u = 0.0;
    return ch;
  }

  double utility(Point z) const { return choose(z).u; }

  // Option offered at boundary parameter x of the A strip (z1 = x).
  MenuOption a_option(double x) const {
    const auto& r = rule_;
    const double sl = x < r.a ? r.s.slope_right(x) : r.s.slope_left(r.a);
    const double xx = std::min(x, r.a);
    return checked({-sl, 1.0, r.s(xx) - xx * sl});
  }

  // Option offered at boundary height y of the B strip (z2 = y).
  MenuOption b_option(double y) const {
    const auto& r = rule_;
    const double x = std::max(r.s.inverse(y), r.b);
    const double sl = x <= r.b ? r.s.slope_right(r.b) : r.s.slope_left(x);
    if (!(sl < 0)) throw SlopeOutOfRange("Mechanism: zero slope on the B strip");
    return checked({1.0, -1.0 / sl, x - y / sl});
  }

  MenuOption bundle_option() const { return {1.0, 1.0, rule_.price}; }

  // z1 locations where u has kinks across a box (outer quadrature breaks).
  std::vector<double> z1_breaks(const Box& box) const {
    std::vector<double> out;
    if (partition_) {
      out = {rule_.a, rule_.b, rule_.c};
      for (double j : rule_.s.junctions()) out.push_back(j);
      return out;
    }
    const std::size_t n = options_.size();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double d1 = options_[i].q1 - options_[j].q1, d2 = options_[i].q2 - options_[j].q2;
        const double dt = options_[i].t - options_[j].t;
        if (d1 == 0.0) continue;
        for (double y : {box.y0, box.y1}) out.push_back((dt - y * d2) / d1);
        for (std::size_t k = j + 1; k < n; ++k) {
          // Common point of the three tie lines, when it exists.
          const double e1 = options_[i].q1 - options_[k].q1, e2 = options_[i].q2 - options_[k].q2;
          const double et = options_[i].t - options_[k].t;
          const double det = d1 * e2 - d2 * e1;
          if (std::fabs(det) > 1e-14) out.push_back((dt * e2 - d2 * et) / det);
        }
      }
    return out;
  }

  // z2 kinks of u along the vertical line at z1.
  void z2_breaks(double z1, double lo, double hi, std::vector<double>& out) const {
    if (partition_) {
      const double y = rule_.s(rule_.b);
      if (z1 > rule_.a && y > lo && y < hi) out.push_back(y);
      return;
    }
    const std::size_t n = options_.size();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double d2 = options_[i].q2 - options_[j].q2;
        if (d2 == 0.0) continue;
        const double y = (options_[i].t - options_[j].t - z1 * (options_[i].q1 - options_[j].q1)) / d2;
        if (y > lo && y < hi) out.push_back(y);
      }
  }

 private:
  std::vector<MenuOption> options_;
  PartitionRule rule_;
  bool partition_ = false;

  static MenuOption checked(MenuOption o) {
    constexpr double eps = 1e-12;
    if (o.q1 < -eps || o.q1 > 1 + eps || o.q2 < -eps || o.q2 > 1 + eps)
      throw SlopeOutOfRange("Mechanism: allocation outside [0,1]");
    return o;
  }

  MenuOption outcome(Point z, Zone zone) const {
    switch (zone) {
      case Zone::Zero: return {};
      case Zone::A: return a_option(z.z1);
      case Zone::B: return b_option(z.z2);
      default: return bundle_option();
    }
  }

  // Utility-maximizing option; near-ties go to the highest price.
  Choice choose_menu(Point z) const {
    double best = -kInf;
    for (const auto& o : options_) best = std::max(best, o.value(z));
    Choice ch;
    ch.u = -kInf;
    const double band = 1e-12 * (1.0 + std::fabs(best));
    for (std::size_t i = 0; i < options_.size(); ++i) {
      const double v = options_[i].value(z);
      if (v >= best - band && (ch.index < 0 || options_[i].t > ch.option.t)) {
        ch.option = options_[i];
        ch.index = static_cast<int>(i);
        ch.u = v;
      }
    }
    ch.u = std::max(ch.u, 0.0);
    return ch;
  }
};

// ---- auditing ----

using PairSampler = std::function<std::pair<Point, Point>(std::mt19937_64&)>;

inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline PairSampler box_pair_sampler(Box box) {
  return [box](std::mt19937_64& rng) {
    auto draw = [&] {
      return Point{box.x0 + (box.x1 - box.x0) * uniform01(rng), box.y0 + (box.y1 - box.y0) * uniform01(rng)};
    };
    Point z = draw();
    return std::pair{z, draw()};
  };
}

// Pairs drawn zone by zone so every ordered pair of regions is exercised;
// a quarter of the deviations sit exactly on the curve.
inline PairSampler zone_pair_sampler(const Mechanism& m, Box box) {
  return [&m, box](std::mt19937_64& rng) {
    auto draw = [&] {
      return Point{box.x0 + (box.x1 - box.x0) * uniform01(rng), box.y0 + (box.y1 - box.y0) * uniform01(rng)};
    };
    const Zone zones[] = {Zone::Zero, Zone::A, Zone::B, Zone::W};
    auto draw_in = [&](Zone want) {
      for (int k = 0; k < 200; ++k) {
        Point z = draw();
        if (m.zone(z) == want) return z;
      }
      return draw();
    };
    Point z = draw_in(zones[rng() % 4]);
    Point zp = draw_in(zones[rng() % 4]);
    if (!m.is_menu() && rng() % 4 == 0) {
      const auto& s = m.rule().s;
      const double x = s.lo() + (s.hi() - s.lo()) * uniform01(rng);
      zp = {x, s(x)};
    }
    return std::pair{z, zp};
  };
}

struct AuditReport {
  int pairs = 0;
  double ic_violation = -kInf;  // max of z.q(z') - t(z') - u(z)
  Point ic_worst_type, ic_worst_report;
  double ir_violation = -kInf;  // max of -u(z)
  bool passed(double ic_tol = 1e-8, double ir_tol = 1e-12) const {
    return ic_violation <= ic_tol && ir_violation <= ir_tol;
  }
};

inline AuditReport audit_ic_ir(const Mechanism& m, const PairSampler& sampler, int count, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  AuditReport rep;
  for (int i = 0; i < count; ++i) {
    const auto [z, zp] = sampler(rng);
    const Choice own = m.choose(z);
    const Choice dev = m.choose(zp);
    const double gain = dev.option.value(z) - own.u;
    if (gain > rep.ic_violation) {
      rep.ic_violation = gain;
      rep.ic_worst_type = z;
      rep.ic_worst_report = zp;
    }
    rep.ir_violation = std::max(rep.ir_violation, -own.u);
    ++rep.pairs;
  }
  return rep;
}

struct ShapeReport {
  double convexity = -kInf;     // max of u(mid) - (u(x)+u(y))/2
  double monotonicity = -kInf;  // max of u(x) - u(y) over x <= y
  double grad_min = kInf, grad_max = -kInf;
  bool passed(double conv_tol = 1e-9, double grad_tol = 1e-6) const {
    return convexity <= conv_tol && monotonicity <= conv_tol && grad_min >= -grad_tol && grad_max <= 1 + grad_tol;
  }
};

inline ShapeReport audit_shape(const Mechanism& m, Box box, int count, std::uint64_t seed = 2) {
  std::mt19937_64 rng(seed);
  ShapeReport rep;
  auto draw = [&] {
    return Point{box.x0 + (box.x1 - box.x0) * uniform01(rng), box.y0 + (box.y1 - box.y0) * uniform01(rng)};
  };
  const double h = 1e-6;
  for (int i = 0; i < count; ++i) {
    const Point x = draw(), y = draw();
    const Point mid{0.5 * (x.z1 + y.z1), 0.5 * (x.z2 + y.z2)};
    const double ux = m.utility(x), uy = m.utility(y);
    rep.convexity = std::max(rep.convexity, m.utility(mid) - 0.5 * (ux + uy));
    const Point lo{std::min(x.z1, y.z1), std::min(x.z2, y.z2)}, hi{std::max(x.z1, y.z1), std::max(x.z2, y.z2)};
    rep.monotonicity = std::max(rep.monotonicity, m.utility(lo) - m.utility(hi));
    if (x.z1 + h < box.x1 && x.z2 + h < box.y1) {
      const double g1 = (m.utility({x.z1 + h, x.z2}) - ux) / h;
      const double g2 = (m.utility({x.z1, x.z2 + h}) - ux) / h;
      rep.grad_min = std::min({rep.grad_min, g1, g2});
      rep.grad_max = std::max({rep.grad_max, g1, g2});
    }
  }
  return rep;
}

// ---- revenue ----

// Expected revenue as the integral of u against the transform field.
inline double revenue_quadrature(const Fn2& u, const TransformField& field, const Region& region, const Tolerance& tol,
                                 const InnerBreaks& breaks = {}) {
  auto f = [&](double z1, double z2) {
    const double v = u(z1, z2);
    return v == 0.0 ? 0.0 : v * field.phi(z1, z2);
  };
  return integrate_2d(f, region, tol, breaks);
}

inline double revenue_quadrature(const Fn2& u, const TransformField& field, const Tolerance& tol) {
  return revenue_quadrature(u, field, box_region(support_box(field, tol, 1)), tol);
}

inline double revenue_quadrature(const Mechanism& m, const TransformField& field, const Tolerance& tol) {
  const Box box = support_box(field, tol, 1);
  Region region = m.is_menu() ? box_region(box) : above_curve(m.rule().s, box);
  const auto extra = m.z1_breaks(box);
  for (auto& slab : region)
    for (double x : extra)
      if (x > slab.x0 && x < slab.x1) slab.breaks.push_back(x);
  auto u = [&m](double z1, double z2) { return m.utility({z1, z2}); };
  auto breaks = [&m](double z1, double lo, double hi, std::vector<double>& out) { m.z2_breaks(z1, lo, hi, out); };
  return revenue_quadrature(u, field, region, tol, breaks);
}

// Mergeable running mean and variance.
struct RunningStats {
  std::int64_t n = 0;
  double mean = 0.0, m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  void merge(const RunningStats& o) {
    if (o.n == 0) return;
    const double na = static_cast<double>(n), nb = static_cast<double>(o.n);
    const double d = o.mean - mean;
    const double nt = na + nb;
    mean += d * nb / nt;
    m2 += o.m2 + d * d * na * nb / nt;
    n += o.n;
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
};

struct MonteCarloResult {
  double mean = 0.0;
  double ci95 = 0.0;
  std::int64_t samples = 0;
};

// Average payment over inverse-CDF draws; each shard owns a seeded substream.
inline MonteCarloResult revenue_monte_carlo(const Mechanism& m, const Instance& inst, std::int64_t samples,
                                            std::uint64_t seed, int shards = 16) {
  if (samples < 1) throw InvalidParameter("revenue_monte_carlo: samples must be >= 1");
  RunningStats total;
  for (int s = 0; s < shards; ++s) {
    const std::int64_t n = samples / shards + (s < samples % shards ? 1 : 0);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(s)};
    std::mt19937_64 rng(seq);
    RunningStats st;
    for (std::int64_t i = 0; i < n; ++i) {
      const double z1 = inst[0].quantile(uniform01(rng));
      const double z2 = inst[1].quantile(uniform01(rng));
      st.add(m.choose({z1, z2}).option.t);
    }
    total.merge(st);
  }
  return {total.mean, 1.96 * std::sqrt(total.variance() / static_cast<double>(total.n)), total.n};
}

// ---- baselines ----

struct PriceResult {
  double p1 = 0.0, p2 = 0.0;
  double revenue = 0.0;
};

inline double separate_price_revenue(const Instance& inst, double p1, double p2) {
  return p1 * inst[0].survival(p1) + p2 * inst[1].survival(p2);
}

inline PriceResult best_separate_prices(const Instance& inst, int grid = 50) {
  PriceResult best;
  auto axis = [&](int i, int k) {
    const double lo = inst[i].lo, hi = inst[i].quantile(0.99);
    return lo + (hi - lo) * (k + 1) / grid;
  };
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j) {
      const double p1 = axis(0, i), p2 = axis(1, j);
      const double r = separate_price_revenue(inst, p1, p2);
      if (r > best.revenue) best = {p1, p2, r};
    }
  return best;
}

// p * Pr[z1 + z2 >= p].
inline double bundle_price_revenue(const Instance& inst, double p, const Tolerance& tol = {}) {
  const double lo = inst[0].lo, hi = std::min(inst[0].hi, p - inst[1].lo);
  if (!(hi > lo)) return p;
  const double below =
      integrate_1d([&](double z1) { return inst[0].pdf(z1) * inst[1].cdf_at(p - z1); }, lo, hi, tol);
  return p * (1.0 - below);
}

inline PriceResult best_bundle_price(const Instance& inst, int grid = 500, const Tolerance& tol = {}) {
  PriceResult best;
  const double lo = inst[0].lo + inst[1].lo;
  const double hi = inst[0].quantile(0.99) + inst[1].quantile(0.99);
  for (int k = 1; k <= grid; ++k) {
    const double p = lo + (hi - lo) * k / grid;
    const double r = bundle_price_revenue(inst, p, tol);
    if (r > best.revenue) best = {p, p, r};
  }
  return best;
}

}  // namespace mechopt
