#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "mechopt/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthesize and certify revenue-optimal two-item mechanisms"};
  std::string command, spec_path, out_dir;
  double tol = 0.0;
  int grid = 0, probes = 0;
  long long seed = -1, mc_samples = 0;
  app.add_option("command", command, "validate | solve | certify-bundle | oracle | compare | plot")
      ->required()
      ->check(CLI::IsMember({"validate", "solve", "certify-bundle", "oracle", "compare", "plot"}));
  app.add_option("--spec", spec_path, "problem file (JSON)")->required();
  app.add_option("--out", out_dir, "output directory for report.json and plot data");
  app.add_option("--tol", tol, "absolute tolerance")->check(CLI::PositiveNumber);
  app.add_option("--grid", grid, "oracle grid resolution per item")->check(CLI::Range(2, 31));
  app.add_option("--seed", seed, "Monte Carlo and audit seed")->check(CLI::NonNegativeNumber);
  app.add_option("--probes", probes, "line probes per certificate")->check(CLI::PositiveNumber);
  app.add_option("--mc-samples", mc_samples, "Monte Carlo samples")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  mechopt::RunResult rr;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    mechopt::ProblemSpec ps = mechopt::load_problem(spec_path);
    if (tol > 0) ps.tol.abs_tol = tol;
    if (grid > 0) ps.grid = grid;
    if (seed >= 0) ps.seed = static_cast<std::uint64_t>(seed);
    if (probes > 0) ps.probes = probes;
    if (mc_samples > 0) ps.mc_samples = mc_samples;
    std::optional<std::filesystem::path> dir;
    if (!out_dir.empty()) dir = out_dir;
    rr = mechopt::run(command, ps, dir);
  } catch (const std::exception& e) {
    rr.report = {{"command", command},
                 {"error", {{"kind", mechopt::error_kind(e)}, {"message", e.what()}}},
                 {"status", "error"}};
    rr.status = mechopt::Status::Error;
  }
  const std::string text = rr.report.dump(2) + "\n";
  std::cout << text;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream f(std::filesystem::path(out_dir) / "report.json");
    if (!f) {
      std::cerr << "cannot write report.json\n";
      return 1;
    }
    f << text;
  }
  std::cerr << "elapsed " << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
  return static_cast<int>(rr.status);
}
