#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "mechopt/distributions.hpp"
#include "mechopt/errors.hpp"
#include "mechopt/grid.hpp"
#include "mechopt/lp.hpp"
#include "mechopt/measures.hpp"
#include "mechopt/mechanism.hpp"

namespace mechopt {

struct DiscreteInstance {
  std::vector<Point> types;
  std::vector<double> probs;

  void validate() const {
    if (types.size() != probs.size()) throw InvalidParameter("DiscreteInstance: size mismatch");
    double s = 0.0;
    for (double p : probs) {
      if (p < 0) throw InvalidParameter("DiscreteInstance: negative probability");
      s += p;
    }
    if (std::fabs(s - 1.0) > 1e-12) throw InvalidParameter("DiscreteInstance: probabilities must sum to 1");
  }
};

// Independent product of two finite value distributions.
inline DiscreteInstance product_instance(const std::vector<double>& v1, const std::vector<double>& p1,
                                         const std::vector<double>& v2, const std::vector<double>& p2) {
  if (v1.size() != p1.size() || v2.size() != p2.size()) throw InvalidParameter("product_instance: size mismatch");
  DiscreteInstance d;
  for (std::size_t i = 0; i < v1.size(); ++i)
    for (std::size_t j = 0; j < v2.size(); ++j) {
      d.types.push_back({v1[i], v2[j]});
      d.probs.push_back(p1[i] * p2[j]);
    }
  d.validate();
  return d;
}

inline DiscreteInstance uniform_product(const std::vector<double>& v1, const std::vector<double>& v2) {
  return product_instance(v1, std::vector<double>(v1.size(), 1.0 / v1.size()), v2,
                          std::vector<double>(v2.size(), 1.0 / v2.size()));
}

enum class LpMethod { Auto, Simplex, InteriorPoint };

struct GridLPResult {
  std::vector<MenuOption> outcomes;  // per type
  std::vector<double> u;
  double revenue = 0.0;
  double max_ic_violation = 0.0;
  LpMethod method = LpMethod::Simplex;
  int cuts = 0;         // simplex: IC rows generated
  int iterations = 0;   // simplex pivots or interior-point steps
};

// Largest type count solved by the vertex simplex under LpMethod::Auto.
inline constexpr int kSimplexTypeLimit = 64;

// Revenue-maximizing mechanism over a finite type space. Variables per type
// are utility u and allocation q. The simplex path generates IC rows lazily
// and returns a vertex; the interior-point path takes every row at once.
inline GridLPResult solve_grid_lp(const DiscreteInstance& d, LpMethod method = LpMethod::Auto) {
  d.validate();
  const int n = static_cast<int>(d.types.size());
  if (n > 1000) throw SizeLimit("solve_grid_lp: at most 1000 types");
  if (method == LpMethod::Auto) method = n <= kSimplexTypeLimit ? LpMethod::Simplex : LpMethod::InteriorPoint;
  auto U = [](int k) { return 3 * k; };
  auto Q1 = [](int k) { return 3 * k + 1; };
  auto Q2 = [](int k) { return 3 * k + 2; };
  std::vector<double> c(3 * n);
  for (int k = 0; k < n; ++k) {
    c[U(k)] = -d.probs[k];
    c[Q1(k)] = d.probs[k] * d.types[k].z1;
    c[Q2(k)] = d.probs[k] * d.types[k].z2;
  }
  std::vector<SparseRow> base;
  for (int k = 0; k < n; ++k) {
    base.push_back({{{Q1(k), 1.0}}, 1.0});
    base.push_back({{{Q2(k), 1.0}}, 1.0});
    // Nonnegative price: u <= z.q.
    base.push_back({{{U(k), 1.0}, {Q1(k), -d.types[k].z1}, {Q2(k), -d.types[k].z2}}, 0.0});
  }
  // Type i must not gain by reporting j: u_j - u_i + (z_i - z_j).q_j <= 0.
  auto ic_row = [&](int i, int j) {
    const Point zi = d.types[i], zj = d.types[j];
    return SparseRow{{{U(j), 1.0}, {U(i), -1.0}, {Q1(j), zi.z1 - zj.z1}, {Q2(j), zi.z2 - zj.z2}}, 0.0};
  };
  auto violation = [&](const std::vector<double>& x, int i, int j) {
    const Point zi = d.types[i], zj = d.types[j];
    return x[U(j)] - x[U(i)] + (zi.z1 - zj.z1) * x[Q1(j)] + (zi.z2 - zj.z2) * x[Q2(j)];
  };

  GridLPResult res;
  res.method = method;
  std::vector<double> x;
  if (method == LpMethod::Simplex) {
    SimplexLP lp(c);
    for (const auto& r : base) lp.add_row(r.entries, r.b);
    std::vector<std::vector<char>> added(n, std::vector<char>(n, 0));
    for (int round = 0;; ++round) {
      lp.solve();
      x = lp.solution();
      // Most violated deviation per type.
      std::vector<std::pair<int, int>> cand;
      for (int i = 0; i < n; ++i) {
        int best = -1;
        double worst = 1e-10;
        for (int j = 0; j < n; ++j)
          if (i != j && !added[i][j]) {
            const double v = violation(x, i, j);
            if (v > worst) {
              worst = v;
              best = j;
            }
          }
        if (best >= 0) cand.push_back({i, best});
      }
      if (cand.empty()) break;
      if (round > 10000) throw NonConvergence("solve_grid_lp: cutting planes did not settle");
      for (const auto& [i, j] : cand) {
        const SparseRow r = ic_row(i, j);
        lp.add_row(r.entries, r.b);
        added[i][j] = 1;
        ++res.cuts;
      }
    }
    res.iterations = static_cast<int>(lp.pivots());
  } else {
    std::vector<SparseRow> rows = base;
    for (int v = 0; v < 3 * n; ++v) rows.push_back({{{v, -1.0}}, 0.0});
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) rows.push_back(ic_row(i, j));
    const InteriorPointResult ip = solve_interior_point(3 * n, rows, c);
    x = ip.x;
    res.iterations = ip.iterations;
  }
  res.revenue = 0.0;
  for (int k = 0; k < n; ++k) {
    const Point z = d.types[k];
    const double q1 = std::clamp(x[Q1(k)], 0.0, 1.0), q2 = std::clamp(x[Q2(k)], 0.0, 1.0);
    res.u.push_back(x[U(k)]);
    res.outcomes.push_back({q1, q2, std::max(z.z1 * q1 + z.z2 * q2 - x[U(k)], 0.0)});
    res.revenue += d.probs[k] * res.outcomes.back().t;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) res.max_ic_violation = std::max(res.max_ic_violation, violation(x, i, j));
  return res;
}

// Largest IC/IR/bound violation of per-type outcomes over a finite type space.
inline double mechanism_violation(const DiscreteInstance& d, const std::vector<MenuOption>& out) {
  double worst = 0.0;
  const std::size_t n = d.types.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double ui = out[i].value(d.types[i]);
    worst = std::max({worst, -ui, -out[i].t, out[i].q1 - 1, out[i].q2 - 1, -out[i].q1, -out[i].q2});
    for (std::size_t j = 0; j < n; ++j) worst = std::max(worst, out[j].value(d.types[i]) - ui);
  }
  return worst;
}

inline double expected_payment(const DiscreteInstance& d, const std::vector<MenuOption>& out) {
  double r = 0.0;
  for (std::size_t k = 0; k < d.types.size(); ++k) r += d.probs[k] * out[k].t;
  return r;
}

// ---- relaxed problem and its transport dual ----

struct RelaxedSolution {
  GridMeasure mu, nu;
  std::vector<double> u_mu, u_nu;
  double value = 0.0;
  int cuts = 0;
};

inline double primal_value(const RelaxedSolution& s) {
  double v = 0.0;
  for (std::size_t i = 0; i < s.mu.size(); ++i) v += s.u_mu[i] * s.mu.masses[i];
  for (std::size_t j = 0; j < s.nu.size(); ++j) v -= s.u_nu[j] * s.nu.masses[j];
  return v;
}

// max sum u mu - sum u nu subject to u(x) - u(y) <= c(x,y); mu's point at the
// lower corner (if any, given by `anchor`) has u pinned to 0, which forces u >= 0.
inline RelaxedSolution solve_relaxed_grid(const GridMeasure& mu, const GridMeasure& nu, int anchor = 0) {
  const int nx = static_cast<int>(mu.size()), ny = static_cast<int>(nu.size());
  // Variable layout: mu points except the anchor, then nu points.
  std::vector<int> xvar(nx, -1);
  int nv = 0;
  for (int i = 0; i < nx; ++i)
    if (i != anchor) xvar[i] = nv++;
  const int yoff = nv;
  nv += ny;
  std::vector<double> c(nv);
  for (int i = 0; i < nx; ++i)
    if (xvar[i] >= 0) c[xvar[i]] = mu.masses[i];
  for (int j = 0; j < ny; ++j) c[yoff + j] = -nu.masses[j];

  double span = 0.0;
  for (const auto& p : mu.points) span = std::max(span, p.z1 + p.z2);
  for (const auto& p : nu.points) span = std::max(span, p.z1 + p.z2);
  const double cap = 4.0 * span + 1.0;

  auto uval = [&](const std::vector<double>& x, int i, bool is_mu) {
    if (is_mu) return xvar[i] >= 0 ? x[xvar[i]] : 0.0;
    return x[yoff + i];
  };
  RelaxedSolution sol;
  std::vector<std::pair<std::vector<std::pair<int, double>>, double>> cuts;
  // Adds violated constraints until the LP optimum satisfies all of them.
  auto optimize = [&](SimplexLP& lp, std::vector<char>& added) {
    for (int round = 0;; ++round) {
      lp.solve();
      const auto x = lp.solution();
      std::vector<std::pair<double, std::pair<int, int>>> cand;
      for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
          if (added[static_cast<std::size_t>(i) * ny + j]) continue;
          const double v = uval(x, i, true) - uval(x, j, false) - transport_cost(mu.points[i], nu.points[j]);
          if (v > 1e-10) cand.push_back({-v, {i, j}});
        }
      if (cand.empty()) return x;
      if (round > 10000) throw NonConvergence("solve_relaxed_grid: cutting planes did not settle");
      std::sort(cand.begin(), cand.end());
      const std::size_t take = std::min<std::size_t>(cand.size(), std::max(50, nx + ny));
      for (std::size_t k = 0; k < take; ++k) {
        const auto [i, j] = cand[k].second;
        std::vector<std::pair<int, double>> row{{yoff + j, -1.0}};
        if (xvar[i] >= 0) row.push_back({xvar[i], 1.0});
        const double rhs = transport_cost(mu.points[i], nu.points[j]);
        lp.add_row(row, rhs);
        cuts.push_back({row, rhs});
        added[static_cast<std::size_t>(i) * ny + j] = 1;
        ++sol.cuts;
      }
    }
  };
  auto at_cap = [&](const std::vector<double>& x) {
    return std::any_of(x.begin(), x.end(), [&](double v) { return v >= cap - 1e-9; });
  };

  SimplexLP lp(c);
  for (int v = 0; v < nv; ++v) lp.add_row({{v, 1.0}}, cap);
  std::vector<char> added(static_cast<std::size_t>(nx) * ny, 0);
  std::vector<double> x = optimize(lp, added);
  double value = lp.objective();
  if (at_cap(x)) {
    // Optimal potentials are only fixed up to shifts that leave the objective
    // unchanged; among optimal ones take the smallest.
    SimplexLP low(std::vector<double>(nv, -1.0));
    for (int v = 0; v < nv; ++v) low.add_row({{v, 1.0}}, cap);
    for (const auto& [row, rhs] : cuts) low.add_row(row, rhs);
    std::vector<std::pair<int, double>> obj;
    for (int v = 0; v < nv; ++v)
      if (c[v] != 0.0) obj.push_back({v, -c[v]});
    low.add_row(obj, -value + 1e-12 * (1.0 + std::fabs(value)));
    x = optimize(low, added);
    if (at_cap(x)) throw Unbounded("solve_relaxed_grid: potential reached its artificial cap");
  }
  sol.mu = mu;
  sol.nu = nu;
  for (int i = 0; i < nx; ++i) sol.u_mu.push_back(uval(x, i, true));
  for (int j = 0; j < ny; ++j) sol.u_nu.push_back(uval(x, j, false));
  sol.value = value;
  return sol;
}

struct TransportResult {
  TransportPlan plan;
  double cost = 0.0;
};

// Min-cost transport of mu onto nu under c(x,y) = sum max(x_i - y_i, 0), by
// successive shortest paths with Dijkstra on reduced costs.
inline TransportResult solve_discrete_transport(const GridMeasure& mu, const GridMeasure& nu, double tol = 1e-9) {
  const double tm = mu.total(), tn = nu.total();
  if (std::fabs(tm - tn) > tol) throw MassMismatch("solve_discrete_transport: totals differ by " + std::to_string(tm - tn));
  const int n = static_cast<int>(mu.size()), m = static_cast<int>(nu.size());
  std::vector<double> supply = mu.masses, demand(m);
  for (int j = 0; j < m; ++j) demand[j] = nu.masses[j] * (tn > 0 ? tm / tn : 1.0);
  std::vector<double> C(static_cast<std::size_t>(n) * m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) C[static_cast<std::size_t>(i) * m + j] = transport_cost(mu.points[i], nu.points[j]);
  auto cost = [&](int i, int j) { return C[static_cast<std::size_t>(i) * m + j]; };
  std::vector<double> flow(static_cast<std::size_t>(n) * m, 0.0);
  auto F = [&](int i, int j) -> double& { return flow[static_cast<std::size_t>(i) * m + j]; };

  std::vector<double> pi(n, 0.0), pj(m, std::numeric_limits<double>::infinity());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) pj[j] = std::min(pj[j], cost(i, j));
  const double eps = 1e-15 * std::max(1.0, tm);
  const double inf = std::numeric_limits<double>::infinity();

  // Nodes 0..n-1 are supply points, n..n+m-1 demand points.
  std::vector<double> dist(n + m);
  std::vector<int> prev(n + m);
  std::vector<char> done(n + m);
  for (int iter = 0;; ++iter) {
    double left = 0.0;
    for (double s : supply) left += s;
    if (left <= eps * (n + 1)) break;
    if (iter > 100 * (n + m) + 1000) throw NonConvergence("solve_discrete_transport: too many augmentations");
    std::fill(dist.begin(), dist.end(), inf);
    std::fill(prev.begin(), prev.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    for (int i = 0; i < n; ++i)
      if (supply[i] > eps) dist[i] = 0.0;
    int sink = -1;
    while (true) {
      int v = -1;
      for (int k = 0; k < n + m; ++k)
        if (!done[k] && dist[k] < inf && (v < 0 || dist[k] < dist[v])) v = k;
      if (v < 0) break;
      done[v] = 1;
      if (v >= n && demand[v - n] > eps) {
        sink = v;
        break;
      }
      if (v < n) {
        for (int j = 0; j < m; ++j) {
          const double nd = dist[v] + std::max(cost(v, j) + pi[v] - pj[j], 0.0);
          if (nd < dist[n + j]) {
            dist[n + j] = nd;
            prev[n + j] = v;
          }
        }
      } else {
        const int j = v - n;
        for (int i = 0; i < n; ++i) {
          if (F(i, j) <= eps) continue;
          const double nd = dist[v] + std::max(-cost(i, j) + pj[j] - pi[i], 0.0);
          if (nd < dist[i]) {
            dist[i] = nd;
            prev[i] = v;
          }
        }
      }
    }
    if (sink < 0) throw InfeasibleInput("solve_discrete_transport: no augmenting path");
    const double D = dist[sink];
    for (int i = 0; i < n; ++i) pi[i] += std::min(dist[i], D);
    for (int j = 0; j < m; ++j) pj[j] += std::min(dist[n + j], D);

    double amount = demand[sink - n];
    int v = sink, src = -1;
    while (v >= 0) {
      const int p = prev[v];
      if (p < 0) {
        src = v;
        break;
      }
      if (v < n) amount = std::min(amount, F(v, p - n));  // backward edge demand p -> supply v
      v = p;
    }
    amount = std::min(amount, supply[src]);
    v = sink;
    while (prev[v] >= 0) {
      const int p = prev[v];
      if (v >= n)
        F(p, v - n) += amount;
      else
        F(v, p - n) -= amount;
      v = p;
    }
    supply[src] -= amount;
    demand[sink - n] -= amount;
  }

  TransportResult res;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      if (F(i, j) > eps) {
        res.plan.entries.push_back({mu.points[i], nu.points[j], F(i, j), i, j});
        res.cost += F(i, j) * cost(i, j);
      }
  return res;
}

// The dual coupling has marginals scaled by nu's total mass; its cost divided
// by that total bounds the relaxed primal value.
inline TransportPlan scale_plan(const TransportPlan& plan, double factor) {
  TransportPlan out = plan;
  for (auto& e : out.entries) e.mass *= factor;
  return out;
}

struct DualityReport {
  double primal = 0.0;
  double dual = 0.0;        // cost / nu_total
  double gap = 0.0;         // dual - primal
  double slackness = 0.0;   // max |c - (u(x) - u(y))| * mass over the plan
};

inline DualityReport duality_gap(const RelaxedSolution& s, const TransportPlan& plan, double nu_total) {
  const std::size_t nx = s.mu.size(), ny = s.nu.size();
  if (s.u_mu.size() != nx || s.u_nu.size() != ny) throw InfeasibleInput("duality_gap: potentials do not match measures");
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j)
      if (s.u_mu[i] - s.u_nu[j] > transport_cost(s.mu.points[i], s.nu.points[j]) + 1e-9)
        throw InfeasibleInput("duality_gap: potentials violate the cost constraint");
  std::vector<double> mx(nx, 0.0), my(ny, 0.0);
  DualityReport rep;
  double cost = 0.0;
  for (const auto& e : plan.entries) {
    if (e.xi < 0 || e.yi < 0 || e.xi >= static_cast<int>(nx) || e.yi >= static_cast<int>(ny) || e.mass < 0)
      throw InfeasibleInput("duality_gap: plan entry does not reference the measures");
    const double c = transport_cost(s.mu.points[e.xi], s.nu.points[e.yi]);
    cost += c * e.mass;
    mx[e.xi] += e.mass;
    my[e.yi] += e.mass;
    rep.slackness = std::max(rep.slackness, std::fabs(c - (s.u_mu[e.xi] - s.u_nu[e.yi])) * e.mass);
  }
  const double scale = std::max(1.0, nu_total);
  for (std::size_t i = 0; i < nx; ++i)
    if (std::fabs(mx[i] - s.mu.masses[i] * nu_total) > 1e-8 * scale)
      throw InfeasibleInput("duality_gap: plan marginal differs from mu");
  for (std::size_t j = 0; j < ny; ++j)
    if (std::fabs(my[j] - s.nu.masses[j] * nu_total) > 1e-8 * scale)
      throw InfeasibleInput("duality_gap: plan marginal differs from nu");
  rep.primal = primal_value(s);
  rep.dual = cost / nu_total;
  rep.gap = rep.dual - rep.primal;
  return rep;
}

// ---- discretizations of continuous instances ----

struct GridAxis {
  std::vector<double> edges;    // actual cell edges, outermost stretched to the support
  std::vector<double> centres;  // representative points of the nominal cells
};

// k uniform cells over the quantile box [F^-1(0.001), F^-1(0.995)]; the first
// and last cells absorb the tails.
inline GridAxis quantile_axis(const ItemDistribution& d, int k, double top) {
  const double lo = d.quantile(0.001), hi = d.quantile(0.995);
  GridAxis ax;
  for (int j = 0; j <= k; ++j) ax.edges.push_back(lo + (hi - lo) * j / k);
  for (int j = 0; j < k; ++j) ax.centres.push_back(lo + (hi - lo) * (j + 0.5) / k);
  ax.edges.front() = d.lo;
  ax.edges.back() = top;
  return ax;
}

inline DiscreteInstance discretize_instance(const Instance& inst, int k) {
  DiscreteInstance out;
  GridAxis ax[2];
  for (int i = 0; i < 2; ++i) ax[i] = quantile_axis(inst[i], k, inst[i].hi);
  for (int a = 0; a < k; ++a) {
    const double pa = (a + 1 == k ? 1.0 : inst[0].cdf_at(ax[0].edges[a + 1])) - (a == 0 ? 0.0 : inst[0].cdf_at(ax[0].edges[a]));
    for (int b = 0; b < k; ++b) {
      const double pb =
          (b + 1 == k ? 1.0 : inst[1].cdf_at(ax[1].edges[b + 1])) - (b == 0 ? 0.0 : inst[1].cdf_at(ax[1].edges[b]));
      out.types.push_back({ax[0].centres[a], ax[1].centres[b]});
      out.probs.push_back(pa * pb);
    }
  }
  // Renormalize away rounding in the CDF differences.
  const double s = std::accumulate(out.probs.begin(), out.probs.end(), 0.0);
  for (double& p : out.probs) p /= s;
  return out;
}

struct TransformGrid {
  GridMeasure mu;  // index 0 is the unit atom at the lower corner
  GridMeasure nu;
  double nu_scale = 1.0;  // factor applied to nu so the totals agree exactly
};

// Cell masses of the positive and negative parts of the transform field.
inline TransformGrid discretize_transform(const TransformField& field, int k, const Tolerance& tol = {}) {
  TransformGrid g;
  GridAxis ax[2];
  for (int i = 0; i < 2; ++i) ax[i] = quantile_axis(field.item(i), k, field.top(i, tol.abs_tol));
  const Tolerance ct{tol.abs_tol / (k * k), tol.rel_tol, tol.max_depth};
  g.mu.add(field.dminus(), field.atom());
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) {
      const Box cell{ax[0].edges[a], ax[0].edges[a + 1], ax[1].edges[b], ax[1].edges[b + 1]};
      const Region r = box_region(cell);
      const Point p{ax[0].centres[a], ax[1].centres[b]};
      const double mp = field.mass(Which::MU, r, ct), mn = field.mass(Which::NU, r, ct);
      if (mp > 0) g.mu.add(p, mp);
      if (mn > 0) g.nu.add(p, mn);
    }
  g.nu_scale = g.mu.total() / g.nu.total();
  for (double& m : g.nu.masses) m *= g.nu_scale;
  return g;
}

// Objective of a utility function on grid measures.
inline double grid_objective(const Fn2& u, const GridMeasure& mu, const GridMeasure& nu) {
  double v = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) v += u(mu.points[i].z1, mu.points[i].z2) * mu.masses[i];
  for (std::size_t j = 0; j < nu.size(); ++j) v -= u(nu.points[j].z1, nu.points[j].z2) * nu.masses[j];
  return v;
}

}  // namespace mechopt
