#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numbers>

#include "ddc/harness.hpp"

using namespace ddc;
using namespace ddc::harness;
namespace fs = std::filesystem;

namespace {

ExperimentConfig short_experiment() {
  ExperimentConfig cfg = default_experiment();
  cfg.base.episode_length = 100;
  cfg.base.reference.ramp_up = 0.3;
  cfg.base.reference.mid_hold = 0.2;
  cfg.base.reference.ramp_down = 0.3;
  cfg.runs = 2;
  return cfg;
}

fs::path scratch_dir(const char* name) {
  const fs::path p = fs::temp_directory_path() / (std::string("ddc_test_") + name);
  fs::remove_all(p);
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("strategy names") {
  for (auto s : {Strategy::ProposedMethod, Strategy::AlwaysUpdate, Strategy::NeverUpdate}) {
    CHECK(parse_strategy(short_name(s)) == s);
  }
  CHECK_THROWS_AS(parse_strategy("PM"), ConfigError);
}

TEST_CASE("reference schedule") {
  const ReferenceSchedule s;
  const auto ph = reference_phases(s, 1000, 0.01);
  CHECK(ph.ramp_up_begin == 0);
  CHECK(ph.mid_hold_begin == 300);
  CHECK(ph.ramp_down_begin == 650);
  CHECK(ph.final_hold_begin == 950);
  const Matrix r = build_reference(s, 1000, 0.01);
  CHECK(r.cols() == 1000);
  CHECK(r.col(0) == s.start);
  CHECK(r(0, 150) == doctest::Approx(-0.75 * std::numbers::pi));
  CHECK(r(1, 150) == doctest::Approx(0.25 * std::numbers::pi));
  for (long k = 300; k < 650; ++k) CHECK(r.col(k) == s.mid);
  CHECK(r(1, 800) == doctest::Approx(0.25 * std::numbers::pi));
  for (long k = 950; k < 1000; ++k) CHECK(r.col(k) == s.end);
  double worst_step = 0.0;
  for (long k = 1; k < 1000; ++k) worst_step = std::max(worst_step, (r.col(k) - r.col(k - 1)).lpNorm<Eigen::Infinity>());
  CHECK(worst_step <= std::numbers::pi / 2 / 300 + 1e-12);

  CHECK_THROWS_AS(build_reference(s, 900, 0.01), ConfigError);
  ReferenceSchedule neg = s;
  neg.mid_hold = -1.0;
  CHECK_THROWS_AS(reference_phases(neg, 1000, 0.01), ConfigError);
}

TEST_CASE("configuration JSON round trip") {
  ExperimentConfig cfg = default_experiment();
  cfg.runs = 7;
  cfg.master_seed = 42;
  cfg.base.robot.coriolis = plant::CoriolisModel::AsPrinted;
  cfg.base.controller.svd_truncation = 30;
  cfg.base.controller.Q(0, 1) = cfg.base.controller.Q(1, 0) = 0.25;
  cfg.strategies = {Strategy::NeverUpdate, Strategy::ProposedMethod};
  const nlohmann::json j = to_json(cfg);
  const ExperimentConfig back = experiment_from_json(nlohmann::json::parse(j.dump()));
  CHECK(to_json(back) == j);
  CHECK(back.base.controller.Q == cfg.base.controller.Q);
  CHECK(back.strategies == cfg.strategies);
  CHECK(experiment_from_json(nlohmann::json{{"config", j}}).runs == 7);
  CHECK(experiment_from_json(nlohmann::json::object()).runs == default_experiment().runs);
}

TEST_CASE("configuration errors") {
  using nlohmann::json;
  CHECK_THROWS_AS(experiment_from_json(json{{"episode_lenght", 10}}), ConfigError);
  CHECK_THROWS_AS(experiment_from_json(json{{"plant", {{"mass", 1.0}}}}), ConfigError);
  CHECK_THROWS_AS(experiment_from_json(json{{"plant", {{"coriolis", "other"}}}}), ConfigError);
  CHECK_THROWS_AS(experiment_from_json(json{{"plant", {{"m1", -1.0}}}}), ConfigError);
  CHECK_THROWS_AS(experiment_from_json(json{{"runs", "ten"}}), ConfigError);
  CHECK_THROWS_AS(experiment_from_json(json{{"runs", 0}}), ConfigError);
  CHECK_THROWS_AS(experiment_from_json(json{{"strategies", {"xx"}}}), ConfigError);
  CHECK_THROWS_AS(experiment_from_json(json{{"controller", {{"Q", {{1.0, 0.0}}}}}}), ConfigError);
  CHECK_THROWS_AS(experiment_from_json(json{{"controller", {{"lambda_mu", 0.0}}}}), ConfigError);
  CHECK_THROWS_AS(experiment_from_json(json{{"episode_length", 500}}), ConfigError);
  CHECK_THROWS_AS(experiment_from_json(json{{"adaptation", {{"rho", -0.1}}}}), ConfigError);
  CHECK_THROWS_AS(experiment_from_json(json::array()), ConfigError);
  CHECK_THROWS_AS(load_experiment("/nonexistent/ddc.json"), ConfigError);
}

TEST_CASE("excitation is configured exactly for always-update") {
  const ExperimentConfig cfg = default_experiment();
  CHECK(cfg.scenario_for(Strategy::AlwaysUpdate).excitation_bound.value() == 0.25);
  CHECK_FALSE(cfg.scenario_for(Strategy::ProposedMethod).excitation_bound.has_value());
  ScenarioConfig bad = cfg.scenario_for(Strategy::NeverUpdate);
  bad.excitation_bound = 0.1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg.scenario_for(Strategy::AlwaysUpdate);
  bad.excitation_bound.reset();
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("episode seeds") {
  const auto a = episode_seeds(1, 0), b = episode_seeds(1, 1), c = episode_seeds(2, 0);
  CHECK(a.data != a.noise);
  CHECK(a.noise != a.excitation);
  CHECK(a.data != b.data);
  CHECK(a.data != c.data);
  CHECK(episode_seeds(1, 0).noise == a.noise);
}

TEST_CASE("initial data collection") {
  plant::MeasurementNoise noise(plant::NoiseModel{1e-3, 3});
  plant::PlantState final_state;
  const Trajectory t = collect_trajectory(plant::RobotParams{}, 55, 0.25, 0.01, 10, 11, noise, &final_state);
  CHECK(t.length() == 55);
  CHECK(t.inputs().cwiseAbs().maxCoeff() <= 0.25);
  CHECK((t.outputs().col(0) - Eigen::Vector2d(-std::numbers::pi, 0.0)).lpNorm<Eigen::Infinity>() <= 1e-3);
  const Dataset ds = hankel_windows(t, 14);
  CHECK(ds.size() == 42);
  CHECK(ds.trajectories()[5] == t.slice(5, 14));
  CHECK_THROWS_AS(hankel_windows(t, 56), DimensionError);

  const Dataset again = collect_initial_data(plant::RobotParams{}, 55, 0.25, 14, 11, plant::NoiseModel{1e-3, 3});
  CHECK(again == ds);
}

TEST_CASE("quantiles and summaries") {
  CHECK(quantile({3.0, 1.0, 2.0}, 0.5) == 2.0);
  CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.5) == 2.5);
  CHECK(quantile({1.0, 2.0, 3.0, 4.0, 5.0}, 0.25) == 2.0);
  CHECK(quantile({7.0}, 0.75) == 7.0);
  CHECK_THROWS_AS(quantile({}, 0.5), std::invalid_argument);

  std::vector<EpisodeResult> eps(3);
  eps[0].J_tot = 2.0;
  eps[1].J_tot = 1e9;
  eps[1].failed = true;
  eps[2].strategy = Strategy::NeverUpdate;
  eps[2].J_tot = 5.0;
  const auto s = summarize({Strategy::ProposedMethod, Strategy::NeverUpdate, Strategy::AlwaysUpdate}, eps);
  REQUIRE(s.strategies.size() == 3);
  CHECK(s.strategies[0].costs.size() == 1);
  CHECK(s.strategies[0].failures == 1);
  CHECK(s.strategies[0].median == 2.0);
  CHECK(s.strategies[0].q1 == 2.0);
  CHECK(s.strategies[0].q3 == 2.0);
  CHECK(s.strategies[1].median == 5.0);
  CHECK(s.strategies[2].costs.empty());
  CHECK(s.warnings.size() == 1);
}

TEST_CASE("closed-loop episodes") {
  const ExperimentConfig cfg = short_experiment();
  for (auto strategy : {Strategy::ProposedMethod, Strategy::AlwaysUpdate, Strategy::NeverUpdate}) {
    CAPTURE(short_name(strategy));
    const ScenarioConfig sc = cfg.scenario_for(strategy);
    const EpisodeResult ep = run_episode(sc, episode_seeds(1, 0), 0);
    REQUIRE_FALSE(ep.failed);
    REQUIRE(ep.log.size() == 100);
    CHECK(recompute_total_cost(sc, ep) == doctest::Approx(ep.J_tot).epsilon(1e-10));
    const auto& cc = sc.controller;
    Eigen::Vector2d prev = ep.u_initial_prev;
    for (const auto& r : ep.log) {
      CHECK(r.u_applied.lpNorm<Eigen::Infinity>() <= cc.u_max + 1e-6);
      CHECK((r.u_applied - prev).lpNorm<Eigen::Infinity>() <= cc.du_max + 1e-6);
      CHECK((r.y - r.theta).lpNorm<Eigen::Infinity>() <= sc.noise_bound);
      CHECK(r.decision.has_value() == (strategy == Strategy::ProposedMethod));
      if (strategy != Strategy::AlwaysUpdate) CHECK(r.excitation.isZero(0.0));
      if (strategy == Strategy::AlwaysUpdate) CHECK(r.excitation.lpNorm<Eigen::Infinity>() <= 0.25);
      prev = r.u_applied;
    }
    if (strategy == Strategy::ProposedMethod) CHECK(ep.decisions.size() == 100);
  }
}

TEST_CASE("episodes are reproducible and paired across strategies") {
  const ExperimentConfig cfg = short_experiment();
  const auto seeds = episode_seeds(1, 1);
  const EpisodeResult a = run_episode(cfg.scenario_for(Strategy::ProposedMethod), seeds, 1);
  const EpisodeResult b = run_episode(cfg.scenario_for(Strategy::ProposedMethod), seeds, 1);
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) CHECK(step_to_json(a.log[i]).dump() == step_to_json(b.log[i]).dump());

  const EpisodeResult nu = run_episode(cfg.scenario_for(Strategy::NeverUpdate), seeds, 1);
  CHECK(nu.u_initial_prev == a.u_initial_prev);
  CHECK(nu.log.front().theta == a.log.front().theta);
  // Same noise stream: the first measurement agrees bit for bit.
  CHECK(nu.log.front().y == a.log.front().y);
}

TEST_CASE("solver failure budget") {
  ExperimentConfig cfg = short_experiment();
  cfg.base.controller.solver.max_iter = 1;
  cfg.base.controller.solver.polish = false;
  cfg.base.max_solver_failures = 3;
  const EpisodeResult ep = run_episode(cfg.scenario_for(Strategy::NeverUpdate), episode_seeds(1, 0), 0);
  CHECK(ep.failed);
  CHECK(ep.solver_failures == 4);
  CHECK(ep.log.size() == 3);
  for (const auto& r : ep.log) {
    CHECK(r.fallback);
    CHECK(r.u_applied == ep.u_initial_prev);
  }
}

TEST_CASE("Monte-Carlo export") {
  ExperimentConfig cfg = short_experiment();
  cfg.strategies = {Strategy::ProposedMethod, Strategy::NeverUpdate};
  const MonteCarloResult serial = run_monte_carlo(cfg, 1);
  const MonteCarloResult parallel = run_monte_carlo(cfg, 3);
  REQUIRE(serial.episodes.size() == 4);
  CHECK(serial.episodes[1].strategy == Strategy::ProposedMethod);
  CHECK(serial.episodes[1].run == 1);
  CHECK(serial.episodes[2].strategy == Strategy::NeverUpdate);
  for (std::size_t i = 0; i < 4; ++i) CHECK(serial.episodes[i].J_tot == parallel.episodes[i].J_tot);

  const fs::path dir = scratch_dir("export");
  export_results(cfg, serial.summary, serial.episodes, dir);
  const std::string results = read_file(dir / "results.csv");
  CHECK(std::count(results.begin(), results.end(), '\n') == 5);
  CHECK(results.rfind("strategy,run,J_tot,failed\n", 0) == 0);
  CHECK(fs::exists(dir / "summary.csv"));
  CHECK(fs::exists(dir / "episodes" / "pm_run000.jsonl"));
  CHECK(fs::exists(dir / "episodes" / "nu_run001.jsonl"));
  CHECK(fs::exists(dir / "decisions" / "pm_run001.csv"));
  CHECK_FALSE(fs::exists(dir / "decisions" / "nu_run000.csv"));
  const std::string log = read_file(dir / "episodes" / "pm_run000.jsonl");
  CHECK(std::count(log.begin(), log.end(), '\n') == 100);

  const auto manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
  CHECK(manifest.at("version") == kVersion);
  CHECK(manifest.at("seeds").size() == 2);
  const ExperimentConfig back = experiment_from_json(manifest);
  CHECK(to_json(back) == to_json(cfg));

  const fs::path empty = scratch_dir("empty");
  export_results(cfg, summarize(cfg.strategies, {}), {}, empty);
  CHECK(read_file(empty / "results.csv") == "strategy,run,J_tot,failed\n");

  CHECK_THROWS_AS(export_results(cfg, serial.summary, serial.episodes, dir / "results.csv" / "x"),
                  std::runtime_error);
  fs::remove_all(dir);
  fs::remove_all(empty);
}
