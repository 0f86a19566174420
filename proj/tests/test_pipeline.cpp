#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "mechopt/pipeline.hpp"

using namespace mechopt;
namespace fs = std::filesystem;

namespace {

const fs::path kProblems = MECHOPT_PROBLEMS_DIR;

ProblemSpec problem(const std::string& name, std::int64_t mc_samples = 20000) {
  ProblemSpec ps = load_problem(kProblems / name);
  ps.mc_samples = mc_samples;
  ps.audit_pairs = 2000;
  return ps;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("mechopt_test_" + name);
  fs::remove_all(d);
  return d;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    rows.push_back(cells);
  }
  return rows;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MECHOPT_CLI) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(ParseProblem, AcceptsShippedProblems) {
  for (const char* name : {"powerlaw_6_7.json", "beta_3_3_3_4.json", "exponential_1_1.json", "exponential_2_1.json"}) {
    const ProblemSpec ps = load_problem(kProblems / name);
    EXPECT_EQ(ps.items.size(), 2u) << name;
    EXPECT_EQ(ps.tol.abs_tol, 1e-9) << name;
  }
}

TEST(ParseProblem, RejectsMalformedInput) {
  EXPECT_THROW(parse_problem("{"), ParseError);
  EXPECT_THROW(parse_problem(R"({"items": []})"), ParseError);
  EXPECT_THROW(parse_problem(R"({"items": [{"family": "exponential", "rate": 1}]})"), ParseError);
  EXPECT_THROW(parse_problem(R"({"items": [{"family": "gamma"}, {"family": "gamma"}]})"), ParseError);
  EXPECT_THROW(parse_problem(R"({"items": [{"family": "beta", "a": 3}, {"family": "beta", "a": 3, "b": 3}]})"),
               ParseError);
  EXPECT_THROW(parse_problem(R"({"items": [{"family": "powerlaw", "c": "6"}, {"family": "powerlaw", "c": 7}]})"),
               ParseError);
  EXPECT_THROW(
      parse_problem(R"({"items": [{"family": "exponential", "rate": 1}, {"family": "exponential", "rate": 1}],
                       "tolerances": {"abs": -1}})"),
      InvalidParameter);
  EXPECT_THROW(
      parse_problem(R"({"items": [{"family": "exponential", "rate": 1}, {"family": "exponential", "rate": 1}],
                       "oracle": {"grid": 1}})"),
      ParseError);
  EXPECT_THROW(load_problem("/nonexistent/problem.json"), IoError);
}

TEST(Run, UnknownCommandIsAnErrorRecord) {
  const RunResult r = run("frobnicate", problem("exponential_1_1.json"));
  EXPECT_EQ(r.status, Status::Error);
  EXPECT_EQ(r.report["status"], "error");
  EXPECT_EQ(r.report["error"]["kind"], "ParseError");
}

TEST(Run, SolveExponentialReportsTheThreeOptionMenu) {
  const RunResult r = run("solve", problem("exponential_2_1.json"));
  ASSERT_EQ(r.status, Status::Ok) << r.report.dump(2);
  const Json& m = r.report["mechanism"];
  EXPECT_EQ(m["kind"], "menu");
  bool lottery = false, bundle = false;
  for (const auto& o : m["options"]) {
    lottery |= o["q1"] == 1.0 && o["q2"] == 0.5 && o["price"] == 1.0;
    bundle |= o["q1"] == 1.0 && o["q2"] == 1.0 && std::fabs(o["price"].get<double>() - 1.2319609530) < 1e-8;
  }
  EXPECT_TRUE(lottery);
  EXPECT_TRUE(bundle);
  EXPECT_TRUE(r.report["audit"]["ic_ir_pass"].get<bool>());
  EXPECT_TRUE(r.report["audit"]["shape_pass"].get<bool>());
  EXPECT_TRUE(r.report["revenue"]["beats_baselines"].get<bool>());
  EXPECT_LE(std::fabs(r.report["certificates"]["exponential"]["mass_residual"].get<double>()), 1e-7);
}

TEST(Run, ReportsAreByteIdenticalForAFixedSeed) {
  const ProblemSpec ps = problem("exponential_2_1.json");
  EXPECT_EQ(run("solve", ps).report.dump(), run("solve", ps).report.dump());
  ProblemSpec other = ps;
  other.seed = 9;
  EXPECT_NE(run("solve", ps).report["revenue"].dump(), run("solve", other).report["revenue"].dump());
}

TEST(Run, CertifyBundleOnPowerLaw) {
  const RunResult r = run("certify-bundle", problem("powerlaw_6_7.json"));
  EXPECT_EQ(r.status, Status::Ok);
  const Json& c = r.report["certificates"]["bundle"];
  EXPECT_TRUE(c["valid"].get<bool>()) << c.dump(2);
  EXPECT_NEAR(c["p_star"].get<double>(), 0.35724989, 1e-6);
}

TEST(Run, FailedBundleCertificateIsInconclusive) {
  ProblemSpec ps = problem("exponential_2_1.json");
  ps.instance = Instance(exponential(3), exponential(1));
  const RunResult r = run("certify-bundle", ps);
  EXPECT_EQ(r.status, Status::Inconclusive);
  EXPECT_EQ(r.report["status"], "inconclusive");
  EXPECT_FALSE(r.report["certificates"]["bundle"]["valid"].get<bool>());
}

TEST(Run, ValidateWritesNoFiles) {
  const fs::path dir = scratch_dir("validate");
  const RunResult r = run("validate", problem("beta_3_3_3_4.json"), dir);
  EXPECT_EQ(r.status, Status::Ok);
  EXPECT_EQ(r.report["validation"].size(), 2u);
  EXPECT_FALSE(fs::exists(dir / "menu.json"));
}

TEST(Run, OracleDualityPassesOnSmallGrid) {
  ProblemSpec ps = problem("exponential_1_1.json");
  ps.grid = 8;
  const RunResult r = run("oracle", ps);
  ASSERT_EQ(r.status, Status::Ok) << r.report.dump(2);
  EXPECT_TRUE(r.report["oracle"]["duality"]["pass"].get<bool>());
  EXPECT_EQ(r.report["oracle"]["grid_lp"]["types"], 64);
}

TEST(Plot, BetaPartitionFiles) {
  const fs::path dir = scratch_dir("beta_plot");
  const RunResult r = run("plot", problem("beta_3_3_3_4.json"), dir);
  ASSERT_EQ(r.status, Status::Ok) << r.report.dump(2);
  const Json& m = r.report["mechanism"];
  EXPECT_EQ(m["kind"], "partition");
  EXPECT_NEAR(m["bundle_price"].get<double>(), 0.71307, 1e-3);
  EXPECT_TRUE(m["continuum"].get<bool>());
  EXPECT_TRUE(r.report["certificates"]["well_formed"]["ok"].get<bool>());

  const auto rows = read_csv(dir / "curves.csv");
  ASSERT_GT(rows.size(), 100u);
  EXPECT_EQ(rows[0][0], "z1");
  // Interpolate S_top between the rows bracketing the reference abscissa.
  double top = std::nan("");
  for (std::size_t i = 2; i < rows.size(); ++i) {
    const double x0 = std::stod(rows[i - 1][0]), x1 = std::stod(rows[i][0]);
    if (x0 <= 0.16016 && x1 >= 0.16016 && x1 > x0 && !rows[i - 1][2].empty() && !rows[i][2].empty()) {
      const double w = (0.16016 - x0) / (x1 - x0);
      top = (1 - w) * std::stod(rows[i - 1][2]) + w * std::stod(rows[i][2]);
      break;
    }
  }
  EXPECT_NEAR(top, 0.55291, 1e-3);

  std::set<std::string> zones;
  for (const auto& row : read_csv(dir / "regions.csv")) zones.insert(row[2]);
  for (const char* z : {"Z", "A", "B", "W"}) EXPECT_TRUE(zones.count(z)) << z;
  std::ifstream menu(dir / "menu.json");
  EXPECT_EQ(Json::parse(menu)["kind"], "partition");
}

TEST(Plot, PureBundlingHasNoStrips) {
  const fs::path dir = scratch_dir("exp_plot");
  ASSERT_EQ(run("plot", problem("exponential_1_1.json"), dir).status, Status::Ok);
  std::set<std::string> zones;
  const auto rows = read_csv(dir / "regions.csv");
  for (std::size_t i = 1; i < rows.size(); ++i) zones.insert(rows[i][2]);
  EXPECT_EQ(zones, (std::set<std::string>{"Z", "W"}));
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch_dir("cli");
  EXPECT_EQ(run_cli("validate --spec " + (kProblems / "exponential_1_1.json").string()), 0);
  EXPECT_EQ(run_cli("certify-bundle --spec " + (kProblems / "powerlaw_6_7.json").string() + " --out " + dir.string()),
            0);
  EXPECT_TRUE(fs::exists(dir / "report.json"));
  EXPECT_EQ(run_cli("solve --spec /nonexistent.json"), 1);
  EXPECT_NE(run_cli("solve"), 0);

  const fs::path spec = dir / "exp31.json";
  std::ofstream(spec) << R"({"items": [{"family": "exponential", "rate": 3}, {"family": "exponential", "rate": 1}]})";
  EXPECT_EQ(run_cli("certify-bundle --spec " + spec.string()), 2);
}
