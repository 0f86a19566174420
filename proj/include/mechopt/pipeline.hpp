#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mechopt/bundling.hpp"
#include "mechopt/canonical.hpp"
#include "mechopt/distributions.hpp"
#include "mechopt/errors.hpp"
#include "mechopt/exponential.hpp"
#include "mechopt/mechanism.hpp"
#include "mechopt/oracle.hpp"

namespace mechopt {

using Json = nlohmann::json;

// Problem file contents after defaults and command-line overrides.
struct ProblemSpec {
  Json items;  // echo of the item descriptors
  Instance instance;
  Tolerance tol;
  int grid = 12;
  std::uint64_t seed = 1;
  int probes = 200;
  std::int64_t mc_samples = 100000;
  int audit_pairs = 10000;
};

inline ItemDistribution parse_item(const Json& j) {
  if (!j.is_object() || !j.contains("family")) throw ParseError("item needs a \"family\" field");
  const std::string fam = j.at("family").get<std::string>();
  auto num = [&](const char* key) {
    if (!j.contains(key) || !j.at(key).is_number()) throw ParseError(fam + " item needs numeric \"" + key + "\"");
    return j.at(key).get<double>();
  };
  if (fam == "exponential") return exponential(num("rate"));
  if (fam == "powerlaw") return powerlaw(num("c"));
  if (fam == "beta") return beta(num("a"), num("b"));
  throw ParseError("unknown family \"" + fam + "\"");
}

inline ProblemSpec parse_problem(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("problem file: ") + e.what());
  }
  ProblemSpec ps;
  if (!j.contains("items") || !j.at("items").is_array() || j.at("items").size() != 2)
    throw ParseError("problem file needs exactly two entries in \"items\"");
  try {
    ps.items = j.at("items");
    ps.instance = Instance(parse_item(ps.items[0]), parse_item(ps.items[1]));
    if (j.contains("tolerances")) {
      const Json& t = j.at("tolerances");
      ps.tol.abs_tol = t.value("abs", ps.tol.abs_tol);
      ps.tol.rel_tol = t.value("rel", ps.tol.rel_tol);
      ps.tol.max_depth = t.value("max_depth", ps.tol.max_depth);
    }
    if (j.contains("oracle")) ps.grid = j.at("oracle").value("grid", ps.grid);
    ps.seed = j.value("seed", ps.seed);
    ps.probes = j.value("probes", ps.probes);
    ps.mc_samples = j.value("mc_samples", ps.mc_samples);
    ps.audit_pairs = j.value("audit_pairs", ps.audit_pairs);
  } catch (const Json::exception& e) {
    throw ParseError(std::string("problem file: ") + e.what());
  }
  ps.tol.validate();
  if (ps.grid < 2 || ps.probes < 2 || ps.mc_samples < 1 || ps.audit_pairs < 1)
    throw ParseError("grid, probes, mc_samples and audit_pairs must be positive");
  return ps;
}

inline ProblemSpec load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_problem(ss.str());
}

// ---- serialization ----

inline Json to_json(const MenuOption& o) { return {{"q1", o.q1}, {"q2", o.q2}, {"price", o.t}}; }

inline Json to_json(const CertReport& c) {
  return {{"threshold", c.threshold},
          {"total", c.total},
          {"total_pass", c.total_pass},
          {"line_max", c.line_max},
          {"line_probes", c.probes},
          {"lines_pass", c.lines_pass},
          {"eta_violation", c.eta_violation},
          {"eta_sampled", c.eta_sampled},
          {"eta_pass", c.eta_pass},
          {"decomposition_residual", c.decomposition_residual},
          {"decomposition_pass", c.decomposition_pass},
          {"passed", c.passed()}};
}

inline Json to_json(const BundleCertificate& c) {
  return {{"p_star", c.p_star},
          {"line_max", c.line_max},
          {"line_argmax", c.line_argmax},
          {"zero_set_in_y_margin", c.z_subset_y_margin},
          {"mass_residual", c.mass_residual},
          {"threshold", c.threshold},
          {"dominance", to_json(c.dominance)},
          {"scope", c.scope},
          {"valid", c.valid()}};
}

inline Json to_json(const WellFormednessReport& r) {
  Json checks = Json::object();
  for (const auto& c : r.checks) checks[c.name] = {{"residual", c.residual}, {"passed", c.passed}};
  return {{"checks", checks}, {"threshold", r.threshold}, {"dominance", to_json(r.dominance)}, {"ok", r.ok()}};
}

inline const char* error_kind(const std::exception& e) {
#define MECHOPT_KIND(T) \
  if (dynamic_cast<const T*>(&e)) return #T;
  MECHOPT_KIND(NonConvergence)
  MECHOPT_KIND(InvalidInterval)
  MECHOPT_KIND(NoSignChange)
  MECHOPT_KIND(CurveDomainMismatch)
  MECHOPT_KIND(InvalidParameter)
  MECHOPT_KIND(OutOfSupport)
  MECHOPT_KIND(NoSolution)
  MECHOPT_KIND(MalformedRegion)
  MECHOPT_KIND(MassMismatch)
  MECHOPT_KIND(NotOnHyperplane)
  MECHOPT_KIND(CurveNotFound)
  MECHOPT_KIND(NonConcaveAssembly)
  MECHOPT_KIND(SlopeOutOfRange)
  MECHOPT_KIND(SizeLimit)
  MECHOPT_KIND(Unbounded)
  MECHOPT_KIND(InfeasibleInput)
  MECHOPT_KIND(ParseError)
  MECHOPT_KIND(IoError)
#undef MECHOPT_KIND
  return "Error";
}

// ---- solve ----

enum class Status { Ok = 0, Error = 1, Inconclusive = 2 };

struct Solution {
  Mechanism mechanism = Mechanism::from_menu({});
  std::optional<CanonicalPartition> partition;
  std::optional<BundleCertificate> bundle;
  std::optional<WellFormednessReport> well_formed;
  std::optional<ExponentialSolution> exponential;
  std::vector<std::string> trace;
  bool conclusive = false;
};

inline bool both_exponential(const Instance& inst) {
  return inst[0].family == "exponential" && inst[1].family == "exponential";
}

// Exponential closed form when it applies; otherwise the grand bundle is
// tried first and the canonical partition second.
inline Solution synthesize(const ProblemSpec& ps) {
  Solution sol;
  const TransformField field(ps.instance);
  if (both_exponential(ps.instance)) {
    sol.trace.push_back("exponential closed form");
    sol.exponential = solve_two_exponential(ps.instance[0].params[0], ps.instance[1].params[0], ps.tol);
    sol.mechanism = sol.exponential->mechanism();
    sol.conclusive = true;
    return sol;
  }
  sol.trace.push_back("grand bundle certificate");
  try {
    const double p = critical_bundle_price(field, ps.tol);
    sol.bundle = certify_grand_bundle(field, p, ps.tol, ps.probes);
    if (sol.bundle->valid()) {
      sol.mechanism = Mechanism::from_menu({{1.0, 1.0, p}});
      sol.conclusive = true;
      return sol;
    }
    sol.trace.push_back("grand bundle certificate inconclusive");
  } catch (const NoSolution&) {
    sol.trace.push_back("no critical bundle price");
  }
  sol.trace.push_back("canonical partition");
  const BoundaryCurves cv = compute_boundary_curves(field, ps.tol);
  sol.partition = find_critical_price(field, cv, ps.tol);
  sol.well_formed = verify_well_formed(field, *sol.partition, ps.tol, ps.probes);
  sol.mechanism = synthesize_mechanism(*sol.partition);
  sol.conclusive = sol.well_formed->ok();
  return sol;
}

// Box covering all but a thin upper tail of each item, for audits and plots.
inline Box audit_box(const Instance& inst) {
  return {inst[0].lo, inst[0].quantile(0.999), inst[1].lo, inst[1].quantile(0.999)};
}

inline Json mechanism_json(const Solution& sol) {
  const Mechanism& m = sol.mechanism;
  if (m.is_menu()) {
    Json opts = Json::array();
    for (const auto& o : m.options()) opts.push_back(to_json(o));
    return {{"kind", "menu"}, {"options", opts}};
  }
  const CanonicalPartition& p = *sol.partition;
  Json knots = Json::array();
  for (const auto& k : p.s.knots()) knots.push_back({k.z1, k.z2});
  Json a_opts = Json::array(), b_opts = Json::array();
  constexpr int kSamples = 20;
  for (int i = 0; i <= kSamples; ++i) {
    const double x = p.s.lo() + (p.a - p.s.lo()) * i / kSamples;
    if (p.a > p.s.lo()) a_opts.push_back(to_json(m.a_option(x)));
    const double y0 = p.s(p.c), y1 = p.s(p.b);
    if (y1 > y0) b_opts.push_back(to_json(m.b_option(y0 + (y1 - y0) * i / kSamples)));
  }
  return {{"kind", "partition"},
          {"bundle_price", p.p_star},
          {"a", p.a},
          {"b", p.b},
          {"c", p.c},
          {"continuum", p.a > p.s.lo() || p.c > p.b},
          {"zero_set_boundary", knots},
          {"a_strip_options", a_opts},
          {"b_strip_options", b_opts}};
}

inline Json revenue_json(const Solution& sol, const ProblemSpec& ps) {
  const TransformField field(ps.instance);
  const double rq = revenue_quadrature(sol.mechanism, field, ps.tol);
  const MonteCarloResult mc = revenue_monte_carlo(sol.mechanism, ps.instance, ps.mc_samples, ps.seed);
  const PriceResult sep = best_separate_prices(ps.instance, 50);
  const PriceResult bun = best_bundle_price(ps.instance, 500, ps.tol);
  const double diff = mc.mean - rq;
  return {{"quadrature", {{"value", rq}, {"tol", ps.tol.abs_tol}}},
          {"monte_carlo", {{"mean", mc.mean}, {"ci95", mc.ci95}, {"samples", mc.samples}, {"seed", ps.seed}}},
          {"difference", diff},
          {"within_ci95", std::fabs(diff) <= mc.ci95},
          {"baselines",
           {{"separate_prices", {{"p1", sep.p1}, {"p2", sep.p2}, {"revenue", sep.revenue}, {"grid", 50}}},
            {"bundle_price", {{"p", bun.p1}, {"revenue", bun.revenue}, {"grid", 500}}}}},
          {"beats_baselines", rq >= std::max(sep.revenue, bun.revenue) - 1e-6}};
}

inline Json audit_json(const Solution& sol, const ProblemSpec& ps) {
  const Box box = audit_box(ps.instance);
  const AuditReport a = audit_ic_ir(sol.mechanism, zone_pair_sampler(sol.mechanism, box), ps.audit_pairs, ps.seed);
  const ShapeReport s = audit_shape(sol.mechanism, box, ps.audit_pairs, ps.seed + 1);
  return {{"pairs", a.pairs},
          {"ic_violation", a.ic_violation},
          {"ir_violation", a.ir_violation},
          {"ic_ir_pass", a.passed()},
          {"convexity_violation", s.convexity},
          {"monotonicity_violation", s.monotonicity},
          {"gradient_min", s.grad_min},
          {"gradient_max", s.grad_max},
          {"shape_pass", s.passed()}};
}

inline Json solution_json(const Solution& sol, const ProblemSpec& ps) {
  Json certs = Json::object();
  if (sol.exponential) {
    const auto& e = *sol.exponential;
    const TransformField field(ps.instance);
    const double mres = zero_space_mass(field, e.lambda1, e.lambda2, e.p_star, ps.tol) - 1.0;
    certs["exponential"] = {{"p_star", e.p_star},
                            {"pure_bundling", e.pure_bundling},
                            {"mass_residual", mres},
                            {"tol", ps.tol.abs_tol}};
  }
  if (sol.bundle) certs["bundle"] = to_json(*sol.bundle);
  if (sol.well_formed) certs["well_formed"] = to_json(*sol.well_formed);
  return {{"trace", sol.trace}, {"certificates", certs}, {"mechanism", mechanism_json(sol)}};
}

// ---- oracle and compare ----

inline Json oracle_json(const ProblemSpec& ps) {
  const DiscreteInstance d = discretize_instance(ps.instance, ps.grid);
  const GridLPResult lp = solve_grid_lp(d);
  const TransformField field(ps.instance);
  const TransformGrid g = discretize_transform(field, ps.grid, ps.tol);
  const RelaxedSolution rs = solve_relaxed_grid(g.mu, g.nu, 0);
  const TransportResult tr = solve_discrete_transport(g.mu, g.nu);
  const double nt = g.nu.total();
  const DualityReport dr = duality_gap(rs, scale_plan(tr.plan, nt), nt);
  return {{"grid", ps.grid},
          {"grid_lp", {{"types", d.types.size()},
                       {"revenue", lp.revenue},
                       {"ic_violation", lp.max_ic_violation},
                       {"method", lp.method == LpMethod::Simplex ? "simplex" : "interior point"}}},
          {"relaxed", {{"value", rs.value}, {"mu_points", g.mu.size()}, {"nu_points", g.nu.size()}}},
          {"transport", {{"cost", tr.cost}, {"entries", tr.plan.entries.size()}}},
          {"duality", {{"primal", dr.primal},
                       {"dual", dr.dual},
                       {"gap", dr.gap},
                       {"slackness", dr.slackness},
                       {"tol", 1e-6},
                       {"pass", std::fabs(dr.gap) <= 1e-6 && dr.slackness <= 1e-6}}}};
}

// ---- plot data ----

// Zone label for plots; menu mechanisms are labelled by the option taken.
inline std::string region_label(const Mechanism& m, Point z) {
  if (!m.is_menu()) return to_string(m.zone(z));
  const MenuOption o = m.choose(z).option;
  if (o.q1 == 0 && o.q2 == 0) return "Z";
  if (o.q1 >= 1 && o.q2 >= 1) return "W";
  return o.q1 >= 1 ? "B" : "A";
}

// Outer boundary of the zero set of a menu mechanism at z1, or NaN.
inline double menu_zero_boundary(const Mechanism& m, double z1) {
  double best = kInf;
  for (const auto& o : m.options())
    if (o.q2 > 0) best = std::min(best, (o.t - o.q1 * z1) / o.q2);
  return best;
}

inline std::vector<std::string> emit_plot_data(const Solution& sol, const ProblemSpec& ps,
                                               const std::filesystem::path& dir, int resolution = 101) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string());
  auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw IoError("cannot write " + (dir / name).string());
    f.precision(10);
    return f;
  };
  const TransformField field(ps.instance);
  const Box box = audit_box(ps.instance);
  const Mechanism& m = sol.mechanism;

  {
    auto f = open("regions.csv");
    f << "z1,z2,zone,sign\n";
    for (int i = 0; i < resolution; ++i)
      for (int j = 0; j < resolution; ++j) {
        const Point z{box.x0 + (box.x1 - box.x0) * (i + 0.5) / resolution,
                      box.y0 + (box.y1 - box.y0) * (j + 0.5) / resolution};
        f << z.z1 << ',' << z.z2 << ',' << region_label(m, z) << ',' << (field.eta(z.z1, z.z2) > 0 ? 'X' : 'Y')
          << '\n';
      }
  }
  {
    auto f = open("curves.csv");
    f << "z1,s,S_top,S_right\n";
    auto cell = [&](const BoundaryCurve& c, double x) {
      std::ostringstream o;
      o.precision(10);
      if (x >= c.lo() && x <= c.hi()) o << c(x);
      return o.str();
    };
    const int rows = 20 * resolution;
    std::vector<double> xs;
    for (int i = 0; i <= rows; ++i) xs.push_back(box.x0 + (box.x1 - box.x0) * i / rows);
    if (sol.partition) {
      xs.push_back(sol.partition->a);
      xs.push_back(sol.partition->b);
      xs.push_back(sol.partition->c);
    }
    std::sort(xs.begin(), xs.end());
    for (double x : xs) {
      f << x << ',';
      if (sol.partition) {
        const auto& p = *sol.partition;
        f << cell(p.s, x) << ',' << cell(p.curves.top, x) << ',' << cell(p.curves.right, x) << '\n';
      } else {
        const double y = menu_zero_boundary(m, x);
        if (y >= box.y0 && std::isfinite(y)) f << y;
        f << ",,\n";
      }
    }
  }
  {
    auto f = open("menu.json");
    f << mechanism_json(sol).dump(2) << '\n';
  }
  return {"regions.csv", "curves.csv", "menu.json"};
}

// ---- commands ----

struct RunResult {
  Json report;
  Status status = Status::Ok;
};

inline Json validate_json(const ProblemSpec& ps) {
  Json out = Json::array();
  for (int i = 0; i < 2; ++i) {
    const ValidationReport r = validate(ps.instance[i], ps.tol);
    Json checks = Json::object();
    for (const auto& c : r.checks) checks[c.name] = {{"residual", c.residual}, {"passed", c.passed}};
    out.push_back({{"item", i + 1}, {"checks", checks}, {"ok", r.ok()}});
  }
  return out;
}

// Runs one command. Module errors become an error record with status 1.
inline RunResult run(const std::string& command, const ProblemSpec& ps,
                     const std::optional<std::filesystem::path>& out_dir = std::nullopt) {
  RunResult rr;
  Json& rep = rr.report;
  rep["command"] = command;
  rep["instance"] = {{"items", ps.items}};
  rep["options"] = {{"abs_tol", ps.tol.abs_tol},
                    {"rel_tol", ps.tol.rel_tol},
                    {"certificate_threshold", 100.0 * ps.tol.abs_tol},
                    {"grid", ps.grid},
                    {"seed", ps.seed},
                    {"probes", ps.probes},
                    {"mc_samples", ps.mc_samples},
                    {"audit_pairs", ps.audit_pairs}};
  try {
    if (command == "validate") {
      rep["validation"] = validate_json(ps);
      for (const auto& r : rep["validation"])
        if (!r["ok"].get<bool>()) rr.status = Status::Error;
    } else if (command == "certify-bundle") {
      const TransformField field(ps.instance);
      const double p = critical_bundle_price(field, ps.tol);
      const BundleCertificate c = certify_grand_bundle(field, p, ps.tol, ps.probes);
      rep["certificates"] = {{"bundle", to_json(c)}};
      rr.status = c.valid() ? Status::Ok : Status::Inconclusive;
    } else if (command == "solve" || command == "plot" || command == "compare") {
      const Solution sol = synthesize(ps);
      rep.update(solution_json(sol, ps));
      rr.status = sol.conclusive ? Status::Ok : Status::Inconclusive;
      if (command == "solve") {
        rep["revenue"] = revenue_json(sol, ps);
        rep["audit"] = audit_json(sol, ps);
      } else if (command == "compare") {
        const TransformField field(ps.instance);
        const double rq = revenue_quadrature(sol.mechanism, field, ps.tol);
        const GridLPResult lp = solve_grid_lp(discretize_instance(ps.instance, ps.grid));
        rep["comparison"] = {{"continuous_revenue", rq},
                             {"grid_lp_revenue", lp.revenue},
                             {"grid", ps.grid},
                             {"difference", lp.revenue - rq}};
      } else {
        const auto dir = out_dir.value_or(std::filesystem::path("."));
        rep["files"] = emit_plot_data(sol, ps, dir);
      }
    } else if (command == "oracle") {
      rep["oracle"] = oracle_json(ps);
    } else {
      throw ParseError("unknown command \"" + command + "\"");
    }
  } catch (const std::exception& e) {
    rep["error"] = {{"kind", error_kind(e)}, {"message", e.what()}};
    rr.status = Status::Error;
  }
  rep["status"] = rr.status == Status::Ok ? "ok" : rr.status == Status::Inconclusive ? "inconclusive" : "error";
  return rr;
}

}  // namespace mechopt
