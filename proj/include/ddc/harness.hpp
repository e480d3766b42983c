#pragma once

// Closed-loop experiments on the two-link arm: initial data collection,
// the three dataset update strategies, Monte-Carlo runs with paired noise,
// statistics and export.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ddc/adapter.hpp"
#include "ddc/deepc.hpp"
#include "ddc/plant.hpp"

namespace ddc::harness {

inline constexpr const char* kVersion = "ddc 1.0.0";

/// Malformed or inconsistent configuration (CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Strategy { ProposedMethod, AlwaysUpdate, NeverUpdate };

const char* short_name(Strategy s);  ///< "pm", "au", "nu"
Strategy parse_strategy(const std::string& name);

/// Waypoint schedule; durations in seconds. Whatever remains of the episode
/// after the last ramp is a final hold at `end`.
struct ReferenceSchedule {
  plant::Vec2 start{-3.14159265358979323846, 0.0};
  plant::Vec2 mid{-1.57079632679489661923, 1.57079632679489661923};
  plant::Vec2 end{0.0, 0.0};
  double initial_hold = 0.0;
  double ramp_up = 3.0;
  double mid_hold = 3.5;
  double ramp_down = 3.0;
};

/// Step indices [begin, end) of each schedule segment.
struct ReferencePhases {
  long ramp_up_begin = 0, mid_hold_begin = 0, ramp_down_begin = 0, final_hold_begin = 0, end = 0;
};

ReferencePhases reference_phases(const ReferenceSchedule& schedule, long episode_length, double dt);

/// 2 x episode_length matrix of joint-angle references. Throws ConfigError if
/// the segments do not fit into the episode.
Matrix build_reference(const ReferenceSchedule& schedule, long episode_length, double dt);

struct DataCollection {
  long steps = 55;
  double input_bound = 0.25;
};

struct Adaptation {
  double rho = 0.005;
  Eigen::Index n_estimate = 4;
};

/// Everything one closed-loop episode needs.
struct ScenarioConfig {
  Strategy strategy = Strategy::ProposedMethod;
  long episode_length = 1000;
  double dt = 0.01;
  int substeps = 10;
  deepc::ControllerConfig controller = deepc::robot_arm_config();
  plant::RobotParams robot{};
  double noise_bound = 1e-3;
  DataCollection data_collection{};
  Adaptation adaptation{};
  std::optional<double> excitation_bound;  ///< present iff strategy is AlwaysUpdate
  ReferenceSchedule reference{};
  int max_solver_failures = 50;

  void validate() const;
};

/// Experiment file contents: a base scenario plus the strategy list and run count.
struct ExperimentConfig {
  ScenarioConfig base{};  ///< strategy / excitation fields ignored
  std::vector<Strategy> strategies{Strategy::ProposedMethod, Strategy::AlwaysUpdate,
                                   Strategy::NeverUpdate};
  double excitation_bound = 0.25;
  int runs = 100;
  std::uint64_t master_seed = 1;

  ScenarioConfig scenario_for(Strategy s) const;
  void validate() const;
};

/// The published two-link study (100 runs, 1000 steps).
ExperimentConfig default_experiment();

nlohmann::json to_json(const ExperimentConfig& cfg);
/// Accepts either a bare config object or a manifest with a "config" member.
ExperimentConfig experiment_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment(const std::filesystem::path& path);

struct EpisodeSeeds {
  std::uint64_t data = 0;        ///< data-collection inputs
  std::uint64_t noise = 0;       ///< measurement noise
  std::uint64_t excitation = 0;  ///< AU excitation
};

EpisodeSeeds episode_seeds(std::uint64_t master_seed, int run);

/// Random inputs uniform on the inf-ball from the lower equilibrium; returns
/// the single recorded trajectory (inputs u_k, outputs y_k = theta_k + eps_k).
Trajectory collect_trajectory(const plant::RobotParams& robot, long steps, double input_bound,
                              double dt, int substeps, std::uint64_t input_seed,
                              plant::MeasurementNoise& noise, plant::PlantState* final_state = nullptr);

/// All T - L + 1 length-L windows of a trajectory, as a dataset of depth L.
Dataset hankel_windows(const Trajectory& trajectory, Eigen::Index depth);

/// collect_trajectory + hankel_windows with a fresh noise stream.
Dataset collect_initial_data(const plant::RobotParams& robot, long steps, double input_bound,
                             Eigen::Index depth, std::uint64_t input_seed, const plant::NoiseModel& noise,
                             double dt = 0.01, int substeps = 10);

struct StepRecord {
  long step = 0;
  plant::Vec2 u_applied = plant::Vec2::Zero();
  plant::Vec2 u_optimal = plant::Vec2::Zero();  ///< controller output before excitation
  plant::Vec2 excitation = plant::Vec2::Zero();
  plant::Vec2 y = plant::Vec2::Zero();          ///< measured output
  plant::Vec2 theta = plant::Vec2::Zero();      ///< true joint angles
  plant::Vec2 reference = plant::Vec2::Zero();
  double stage_cost = 0.0;
  double ocp_objective = 0.0;
  double alpha_norm = 0.0;
  double mu_norm = 0.0;
  int solver_iterations = 0;
  std::string solver_status;
  bool fallback = false;  ///< previous input held after a solver failure
  bool clipped = false;   ///< excited input clipped to the actuator limits
  std::optional<UpdateDecision> decision;  ///< PM only
};

struct EpisodeResult {
  Strategy strategy = Strategy::ProposedMethod;
  int run = 0;
  EpisodeSeeds seeds{};
  double J_tot = 0.0;
  bool failed = false;
  std::string failure_reason;
  int solver_failures = 0;
  plant::Vec2 u_initial_prev = plant::Vec2::Zero();  ///< input preceding step 0
  std::vector<StepRecord> log;
  std::vector<UpdateDecision> decisions;
};

EpisodeResult run_episode(const ScenarioConfig& cfg, const EpisodeSeeds& seeds, int run = 0);

/// Sum of stage costs recomputed from the log.
double recompute_total_cost(const ScenarioConfig& cfg, const EpisodeResult& episode);

struct StrategySummary {
  Strategy strategy = Strategy::ProposedMethod;
  std::vector<double> costs;  ///< J_tot of successful runs, in run order
  int failures = 0;
  double median = 0.0, q1 = 0.0, q3 = 0.0, min = 0.0, max = 0.0;
};

struct MonteCarloSummary {
  std::vector<StrategySummary> strategies;
  std::vector<std::string> warnings;
};

/// Linear-interpolation quantile of a sample (q in [0, 1]).
double quantile(std::vector<double> values, double q);

MonteCarloSummary summarize(const std::vector<Strategy>& strategies,
                            const std::vector<EpisodeResult>& episodes);

struct MonteCarloResult {
  MonteCarloSummary summary;
  std::vector<EpisodeResult> episodes;  ///< strategy-major, run-minor order
};

/// Runs every (strategy, run) pair, optionally on `workers` threads. Results do
/// not depend on the worker count.
MonteCarloResult run_monte_carlo(const ExperimentConfig& cfg, int workers = 1);

/// Writes results.csv, summary.csv, episodes/*.jsonl, decisions/*.csv and
/// manifest.json under out_dir. Throws std::runtime_error naming the path on
/// I/O failure.
void export_results(const ExperimentConfig& cfg, const MonteCarloSummary& summary,
                    const std::vector<EpisodeResult>& episodes, const std::filesystem::path& out_dir);

nlohmann::json step_to_json(const StepRecord& r);

}  // namespace ddc::harness
