// Command-line entry point: closed-loop experiments, rank scans and data
// collection for the two-link arm.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ddc/harness.hpp"
#include "ddc/robust_rank.hpp"
#include "ddc/trajectory_io.hpp"

namespace {

using namespace ddc;

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

struct RunArgs {
  std::string config;
  std::optional<int> runs;
  std::optional<std::string> strategy;
  std::string out = "results";
  std::optional<std::uint64_t> seed;
  int parallel = 1;
};

struct RankScanArgs {
  std::string data;
  Eigen::Index rank = 0;
  Eigen::Index depth = 14;
  std::optional<double> rho;
};

struct CollectArgs {
  long steps = 55;
  double bound = 0.25;
  std::string out;
  std::uint64_t seed = 1;
  double noise = 1e-3;
};

int cmd_run(const RunArgs& a) {
  harness::ExperimentConfig cfg;
  try {
    cfg = harness::load_experiment(a.config);
    if (a.runs) cfg.runs = *a.runs;
    if (a.seed) cfg.master_seed = *a.seed;
    if (a.strategy) cfg.strategies = {harness::parse_strategy(*a.strategy)};
    cfg.validate();
  } catch (const harness::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  const auto result = harness::run_monte_carlo(cfg, a.parallel);
  harness::export_results(cfg, result.summary, result.episodes, a.out);

  std::cout << "strategy,successful_runs,failures,median,q1,q3,min,max\n" << std::setprecision(8);
  for (const auto& s : result.summary.strategies) {
    std::cout << harness::short_name(s.strategy) << ',' << s.costs.size() << ',' << s.failures << ','
              << s.median << ',' << s.q1 << ',' << s.q3 << ',' << s.min << ',' << s.max << '\n';
  }
  for (const auto& w : result.summary.warnings) std::cerr << "warning: " << w << '\n';
  std::cerr << "results written to " << a.out << '\n';
  return kOk;
}

int cmd_rank_scan(const RankScanArgs& a) {
  std::ifstream in(a.data);
  if (!in) {
    std::cerr << "cannot open " << a.data << '\n';
    return kConfigError;
  }
  std::vector<Trajectory> raw;
  try {
    raw = io::read_trajectories_csv(in);
  } catch (const io::FormatError& e) {
    std::cerr << a.data << ": " << e.what() << '\n';
    return kConfigError;
  }
  // Long recordings are cut into overlapping windows; depth-length ones are used as is.
  std::vector<Trajectory> windows;
  for (const auto& t : raw) {
    if (t.length() < a.depth) {
      std::cerr << a.data << ": trajectory of length " << t.length() << " is shorter than depth "
                << a.depth << '\n';
      return kConfigError;
    }
    const auto d = harness::hankel_windows(t, a.depth);
    windows.insert(windows.end(), d.trajectories().begin(), d.trajectories().end());
  }
  const Matrix h = build_mosaic_hankel(Dataset(std::move(windows), a.depth)).entries;
  const auto spectrum = singular_spectrum(h);
  if (a.rank < 1 || a.rank > spectrum.size()) {
    std::cerr << "rank must lie in [1, " << spectrum.size() << "]\n";
    return kConfigError;
  }

  std::cout << std::setprecision(17) << "index,singular_value\n";
  for (Eigen::Index i = 1; i <= spectrum.size(); ++i) std::cout << i << ',' << spectrum.sigma(i) << '\n';

  const auto window = threshold_window(spectrum, a.rank);
  std::cerr << std::setprecision(6) << "matrix " << h.rows() << " x " << h.cols() << ", rank " << a.rank
            << ": ";
  if (window) {
    std::cerr << "threshold window [" << window->lower << ", " << window->upper << ")\n";
  } else {
    std::cerr << "no admissible threshold\n";
  }
  if (a.rho) {
    std::cerr << "robustified rank at rho = " << *a.rho << ": " << robustified_rank(spectrum, h, *a.rho)
              << '\n';
  }
  return kOk;
}

int cmd_collect(const CollectArgs& a) {
  if (a.steps < 1 || !(a.bound > 0.0) || !(a.noise >= 0.0)) {
    std::cerr << "steps and bound must be positive, noise nonnegative\n";
    return kConfigError;
  }
  plant::MeasurementNoise noise(plant::NoiseModel{a.noise, derive_seed(a.seed, 0, 1)});
  const Trajectory t = harness::collect_trajectory(plant::RobotParams{}, a.steps, a.bound, 0.01, 10,
                                                   derive_seed(a.seed, 0, 0), noise);
  std::ofstream out(a.out);
  if (!out) {
    std::cerr << "cannot write " << a.out << '\n';
    return kRuntimeError;
  }
  io::write_trajectories_csv(out, {t});
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online data-driven predictive control toolkit"};
  app.set_version_flag("--version", harness::kVersion);
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Monte-Carlo reference-tracking study");
  run_cmd->add_option("--config", run.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--runs", run.runs, "number of runs per strategy");
  run_cmd->add_option("--strategy", run.strategy, "run a single strategy")
      ->check(CLI::IsMember({"pm", "au", "nu"}));
  run_cmd->add_option("--out", run.out, "output directory")->capture_default_str();
  run_cmd->add_option("--seed", run.seed, "master seed");
  run_cmd->add_option("--parallel", run.parallel, "worker threads")->check(CLI::PositiveNumber);

  RankScanArgs scan;
  auto* scan_cmd = app.add_subcommand("rank-scan", "singular spectrum of the stacked data matrix");
  scan_cmd->add_option("--data", scan.data, "trajectory CSV")->required()->check(CLI::ExistingFile);
  scan_cmd->add_option("--rank", scan.rank, "required rank")->required();
  scan_cmd->add_option("--depth", scan.depth, "window length L")->capture_default_str();
  scan_cmd->add_option("--rho", scan.rho, "also report the robustified rank at this threshold");

  CollectArgs col;
  auto* col_cmd = app.add_subcommand("collect", "record a random-input trajectory of the arm");
  col_cmd->add_option("--steps", col.steps, "number of samples")->required();
  col_cmd->add_option("--bound", col.bound, "input bound, N m")->required();
  col_cmd->add_option("--out", col.out, "output CSV")->required();
  col_cmd->add_option("--seed", col.seed, "seed")->capture_default_str();
  col_cmd->add_option("--noise", col.noise, "measurement noise bound, rad")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*scan_cmd) return cmd_rank_scan(scan);
    if (*col_cmd) return cmd_collect(col);
  } catch (const harness::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}
