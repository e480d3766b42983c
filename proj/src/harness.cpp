#include "ddc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>

#include "ddc/random.hpp"

namespace ddc::harness {

using nlohmann::json;
using plant::Vec2;

// ---------------------------------------------------------------------------
// Strategies and reference

const char* short_name(Strategy s) {
  switch (s) {
    case Strategy::ProposedMethod:
      return "pm";
    case Strategy::AlwaysUpdate:
      return "au";
    case Strategy::NeverUpdate:
      return "nu";
  }
  return "?";
}

Strategy parse_strategy(const std::string& name) {
  if (name == "pm") return Strategy::ProposedMethod;
  if (name == "au") return Strategy::AlwaysUpdate;
  if (name == "nu") return Strategy::NeverUpdate;
  throw ConfigError("unknown strategy '" + name + "' (expected pm, au or nu)");
}

namespace {

long to_steps(double seconds, double dt, const char* what) {
  if (!(seconds >= 0.0)) throw ConfigError(std::string("reference: negative duration for ") + what);
  return std::lround(seconds / dt);
}

}  // namespace

ReferencePhases reference_phases(const ReferenceSchedule& s, long episode_length, double dt) {
  if (!(dt > 0.0)) throw ConfigError("reference: dt must be positive");
  ReferencePhases ph;
  ph.ramp_up_begin = to_steps(s.initial_hold, dt, "initial_hold");
  ph.mid_hold_begin = ph.ramp_up_begin + to_steps(s.ramp_up, dt, "ramp_up");
  ph.ramp_down_begin = ph.mid_hold_begin + to_steps(s.mid_hold, dt, "mid_hold");
  ph.final_hold_begin = ph.ramp_down_begin + to_steps(s.ramp_down, dt, "ramp_down");
  ph.end = episode_length;
  if (ph.final_hold_begin > episode_length) {
    throw ConfigError("reference: schedule needs " + std::to_string(ph.final_hold_begin) +
                      " steps but the episode has " + std::to_string(episode_length));
  }
  return ph;
}

Matrix build_reference(const ReferenceSchedule& s, long episode_length, double dt) {
  const ReferencePhases ph = reference_phases(s, episode_length, dt);
  auto ramp = [](const Vec2& a, const Vec2& b, long k, long begin, long end) -> Vec2 {
    const double frac = static_cast<double>(k - begin) / static_cast<double>(end - begin);
    return a + frac * (b - a);
  };
  Matrix r(2, episode_length);
  for (long k = 0; k < episode_length; ++k) {
    Vec2 v;
    if (k < ph.ramp_up_begin) {
      v = s.start;
    } else if (k < ph.mid_hold_begin) {
      v = ramp(s.start, s.mid, k, ph.ramp_up_begin, ph.mid_hold_begin);
    } else if (k < ph.ramp_down_begin) {
      v = s.mid;
    } else if (k < ph.final_hold_begin) {
      v = ramp(s.mid, s.end, k, ph.ramp_down_begin, ph.final_hold_begin);
    } else {
      v = s.end;
    }
    r.col(k) = v;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Configuration

void ScenarioConfig::validate() const {
  if (episode_length < 1) throw ConfigError("episode_length must be positive");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (substeps < 1) throw ConfigError("substeps must be positive");
  if (!(noise_bound >= 0.0)) throw ConfigError("noise_bound must be nonnegative");
  if (data_collection.steps < controller.depth()) {
    throw ConfigError("data_collection.steps must be at least T_p + T_f");
  }
  if (!(data_collection.input_bound > 0.0)) throw ConfigError("data_collection.input_bound must be positive");
  if (!(adaptation.rho >= 0.0)) throw ConfigError("adaptation.rho must be nonnegative");
  if (adaptation.n_estimate < 1) throw ConfigError("adaptation.n_estimate must be positive");
  if (max_solver_failures < 0) throw ConfigError("max_solver_failures must be nonnegative");
  const bool au = strategy == Strategy::AlwaysUpdate;
  if (au != excitation_bound.has_value()) {
    throw ConfigError("excitation_bound must be set exactly for the always-update strategy");
  }
  if (au && !(*excitation_bound >= 0.0)) throw ConfigError("excitation_bound must be nonnegative");
  try {
    robot.validate();
    controller.validate(2, 2);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  reference_phases(reference, episode_length, dt);
}

ScenarioConfig ExperimentConfig::scenario_for(Strategy s) const {
  ScenarioConfig sc = base;
  sc.strategy = s;
  sc.excitation_bound.reset();
  if (s == Strategy::AlwaysUpdate) sc.excitation_bound = excitation_bound;
  return sc;
}

void ExperimentConfig::validate() const {
  if (runs < 1) throw ConfigError("runs must be at least 1");
  if (strategies.empty()) throw ConfigError("at least one strategy is required");
  for (auto s : strategies) scenario_for(s).validate();
}

ExperimentConfig default_experiment() { return ExperimentConfig{}; }

namespace {

json diag_or_matrix(const Matrix& m) {
  if (m.isDiagonal()) return std::vector<double>(m.diagonal().begin(), m.diagonal().end());
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
  }
  return rows;
}

Matrix weight_from_json(const json& j, const char* name) {
  if (!j.is_array() || j.empty()) throw ConfigError(std::string(name) + ": expected an array");
  const auto n = static_cast<Eigen::Index>(j.size());
  if (j.front().is_number()) {
    Vector d(n);
    for (Eigen::Index i = 0; i < n; ++i) d(i) = j[static_cast<std::size_t>(i)].get<double>();
    return d.asDiagonal();
  }
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
      throw ConfigError(std::string(name) + ": expected a square matrix");
    }
    for (Eigen::Index k = 0; k < n; ++k) m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

Vec2 vec2_from_json(const json& j, const char* name) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(std::string(name) + ": expected [a, b]");
  return Vec2(j[0].get<double>(), j[1].get<double>());
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  std::set<std::string> known(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

json to_json(const ExperimentConfig& cfg) {
  const auto& b = cfg.base;
  const auto& c = b.controller;
  json strategies = json::array();
  for (auto s : cfg.strategies) strategies.push_back(short_name(s));
  json controller = {
      {"past_horizon", c.past_horizon},
      {"future_horizon", c.future_horizon},
      {"Q", diag_or_matrix(c.Q)},
      {"R", diag_or_matrix(c.R)},
      {"R_delta", diag_or_matrix(c.R_delta)},
      {"lambda_alpha", c.lambda_alpha},
      {"lambda_mu", c.lambda_mu},
      {"u_max", c.u_max},
      {"du_max", c.du_max},
      {"svd_truncation", c.svd_truncation ? json(*c.svd_truncation) : json(nullptr)},
      {"qp_tol", c.solver.tol},
      {"qp_max_iter", c.solver.max_iter},
  };
  json plant = {
      {"m1", b.robot.m1}, {"m2", b.robot.m2}, {"l1", b.robot.l1}, {"l2", b.robot.l2},
      {"d1", b.robot.d1}, {"d2", b.robot.d2}, {"g", b.robot.g},
      {"coriolis", b.robot.coriolis == plant::CoriolisModel::Lagrangian ? "lagrangian" : "as_printed"},
      {"noise_bound", b.noise_bound},
  };
  const auto& r = b.reference;
  json reference = {
      {"start", {r.start(0), r.start(1)}}, {"mid", {r.mid(0), r.mid(1)}},
      {"end", {r.end(0), r.end(1)}},       {"initial_hold", r.initial_hold},
      {"ramp_up", r.ramp_up},              {"mid_hold", r.mid_hold},
      {"ramp_down", r.ramp_down},
  };
  return {
      {"episode_length", b.episode_length},
      {"dt", b.dt},
      {"substeps", b.substeps},
      {"runs", cfg.runs},
      {"master_seed", cfg.master_seed},
      {"strategies", strategies},
      {"max_solver_failures", b.max_solver_failures},
      {"controller", controller},
      {"plant", plant},
      {"data_collection", {{"steps", b.data_collection.steps}, {"input_bound", b.data_collection.input_bound}}},
      {"adaptation", {{"rho", b.adaptation.rho}, {"n_estimate", b.adaptation.n_estimate}}},
      {"always_update", {{"excitation_bound", cfg.excitation_bound}}},
      {"reference", reference},
  };
}

ExperimentConfig experiment_from_json(const json& input) {
  const json& j = input.contains("config") && input.at("config").is_object() ? input.at("config") : input;
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig cfg;
  auto& b = cfg.base;
  try {
    reject_unknown(j,
                   {"episode_length", "dt", "substeps", "runs", "master_seed", "strategies",
                    "max_solver_failures", "controller", "plant", "data_collection", "adaptation",
                    "always_update", "reference"},
                   "config");
    read(j, "episode_length", b.episode_length);
    read(j, "dt", b.dt);
    read(j, "substeps", b.substeps);
    read(j, "runs", cfg.runs);
    read(j, "master_seed", cfg.master_seed);
    read(j, "max_solver_failures", b.max_solver_failures);
    if (j.contains("strategies")) {
      cfg.strategies.clear();
      for (const auto& s : j.at("strategies")) cfg.strategies.push_back(parse_strategy(s.get<std::string>()));
    }
    if (j.contains("controller")) {
      const auto& c = j.at("controller");
      reject_unknown(c,
                     {"past_horizon", "future_horizon", "Q", "R", "R_delta", "lambda_alpha",
                      "lambda_mu", "u_max", "du_max", "svd_truncation", "qp_tol", "qp_max_iter"},
                     "controller");
      auto& cc = b.controller;
      read(c, "past_horizon", cc.past_horizon);
      read(c, "future_horizon", cc.future_horizon);
      if (c.contains("Q")) cc.Q = weight_from_json(c.at("Q"), "Q");
      if (c.contains("R")) cc.R = weight_from_json(c.at("R"), "R");
      if (c.contains("R_delta")) cc.R_delta = weight_from_json(c.at("R_delta"), "R_delta");
      read(c, "lambda_alpha", cc.lambda_alpha);
      read(c, "lambda_mu", cc.lambda_mu);
      read(c, "u_max", cc.u_max);
      read(c, "du_max", cc.du_max);
      if (c.contains("svd_truncation") && !c.at("svd_truncation").is_null()) {
        cc.svd_truncation = c.at("svd_truncation").get<Eigen::Index>();
      }
      read(c, "qp_tol", cc.solver.tol);
      read(c, "qp_max_iter", cc.solver.max_iter);
    }
    if (j.contains("plant")) {
      const auto& p = j.at("plant");
      reject_unknown(p, {"m1", "m2", "l1", "l2", "d1", "d2", "g", "coriolis", "noise_bound"}, "plant");
      read(p, "m1", b.robot.m1);
      read(p, "m2", b.robot.m2);
      read(p, "l1", b.robot.l1);
      read(p, "l2", b.robot.l2);
      read(p, "d1", b.robot.d1);
      read(p, "d2", b.robot.d2);
      read(p, "g", b.robot.g);
      read(p, "noise_bound", b.noise_bound);
      if (p.contains("coriolis")) {
        const auto name = p.at("coriolis").get<std::string>();
        if (name == "lagrangian") {
          b.robot.coriolis = plant::CoriolisModel::Lagrangian;
        } else if (name == "as_printed") {
          b.robot.coriolis = plant::CoriolisModel::AsPrinted;
        } else {
          throw ConfigError("plant.coriolis must be 'lagrangian' or 'as_printed'");
        }
      }
    }
    if (j.contains("data_collection")) {
      const auto& d = j.at("data_collection");
      reject_unknown(d, {"steps", "input_bound"}, "data_collection");
      read(d, "steps", b.data_collection.steps);
      read(d, "input_bound", b.data_collection.input_bound);
    }
    if (j.contains("adaptation")) {
      const auto& a = j.at("adaptation");
      reject_unknown(a, {"rho", "n_estimate"}, "adaptation");
      read(a, "rho", b.adaptation.rho);
      read(a, "n_estimate", b.adaptation.n_estimate);
    }
    if (j.contains("always_update")) {
      const auto& a = j.at("always_update");
      reject_unknown(a, {"excitation_bound"}, "always_update");
      read(a, "excitation_bound", cfg.excitation_bound);
    }
    if (j.contains("reference")) {
      const auto& r = j.at("reference");
      reject_unknown(r, {"start", "mid", "end", "initial_hold", "ramp_up", "mid_hold", "ramp_down"},
                     "reference");
      if (r.contains("start")) b.reference.start = vec2_from_json(r.at("start"), "reference.start");
      if (r.contains("mid")) b.reference.mid = vec2_from_json(r.at("mid"), "reference.mid");
      if (r.contains("end")) b.reference.end = vec2_from_json(r.at("end"), "reference.end");
      read(r, "initial_hold", b.reference.initial_hold);
      read(r, "ramp_up", b.reference.ramp_up);
      read(r, "mid_hold", b.reference.mid_hold);
      read(r, "ramp_down", b.reference.ramp_down);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return experiment_from_json(j);
}

EpisodeSeeds episode_seeds(std::uint64_t master_seed, int run) {
  const auto r = static_cast<std::uint64_t>(run);
  return EpisodeSeeds{derive_seed(master_seed, r, 0), derive_seed(master_seed, r, 1),
                      derive_seed(master_seed, r, 2)};
}

// ---------------------------------------------------------------------------
// Data collection

Trajectory collect_trajectory(const plant::RobotParams& robot, long steps, double input_bound,
                              double dt, int substeps, std::uint64_t input_seed,
                              plant::MeasurementNoise& noise, plant::PlantState* final_state) {
  Rng rng(input_seed);
  plant::PlantState state;
  state.theta = Vec2(-3.14159265358979323846, 0.0);
  Matrix u(2, steps), y(2, steps);
  for (long k = 0; k < steps; ++k) {
    const Vec2 uk(rng.uniform(-input_bound, input_bound), rng.uniform(-input_bound, input_bound));
    u.col(k) = uk;
    y.col(k) = plant::measure(state, noise);
    state = plant::step(robot, state, uk, dt, substeps);
  }
  if (final_state != nullptr) *final_state = state;
  return Trajectory(std::move(u), std::move(y));
}

Dataset hankel_windows(const Trajectory& t, Eigen::Index depth) {
  if (depth < 1 || depth > t.length()) throw DimensionError("hankel_windows: depth exceeds length");
  std::vector<Trajectory> windows;
  windows.reserve(static_cast<std::size_t>(t.length() - depth + 1));
  for (Eigen::Index s = 0; s + depth <= t.length(); ++s) windows.push_back(t.slice(s, depth));
  return Dataset(std::move(windows), depth);
}

Dataset collect_initial_data(const plant::RobotParams& robot, long steps, double input_bound,
                             Eigen::Index depth, std::uint64_t input_seed,
                             const plant::NoiseModel& noise, double dt, int substeps) {
  plant::MeasurementNoise stream(noise);
  return hankel_windows(collect_trajectory(robot, steps, input_bound, dt, substeps, input_seed, stream),
                        depth);
}

// ---------------------------------------------------------------------------
// Episodes

EpisodeResult run_episode(const ScenarioConfig& cfg, const EpisodeSeeds& seeds, int run) {
  cfg.validate();
  EpisodeResult res;
  res.strategy = cfg.strategy;
  res.run = run;
  res.seeds = seeds;

  const auto& cc = cfg.controller;
  const auto Tp = cc.past_horizon;
  const auto Tf = cc.future_horizon;
  const auto L = cc.depth();

  plant::MeasurementNoise noise(plant::NoiseModel{cfg.noise_bound, seeds.noise});
  Rng excitation(seeds.excitation);
  plant::PlantState state;
  const Trajectory data = collect_trajectory(cfg.robot, cfg.data_collection.steps,
                                             cfg.data_collection.input_bound, cfg.dt, cfg.substeps,
                                             seeds.data, noise, &state);
  OnlineAdapter adapter(hankel_windows(data, L), init_policy::FromDataTail{}, cfg.adaptation.rho,
                        cfg.adaptation.n_estimate);
  deepc::Controller controller(cc);
  const Matrix reference = build_reference(cfg.reference, cfg.episode_length, cfg.dt);

  Vec2 u_prev = data.inputs().col(data.length() - 1);
  res.u_initial_prev = u_prev;
  res.log.reserve(static_cast<std::size_t>(cfg.episode_length));

  for (long k = 0; k < cfg.episode_length; ++k) {
    StepRecord rec;
    rec.step = k;
    rec.reference = reference.col(k);

    const Trajectory window = adapter.recent_window();
    deepc::History hist{window.inputs().rightCols(Tp), window.outputs().rightCols(Tp), u_prev};
    Matrix ref_segment(2, Tf);
    for (Eigen::Index i = 0; i < Tf; ++i) {
      ref_segment.col(i) = reference.col(std::min<long>(k + i, cfg.episode_length - 1));
    }

    Vec2 u_opt = u_prev;
    try {
      const deepc::ControlStep cs = controller.step(adapter.dataset(), hist, ref_segment);
      u_opt = cs.u_applied;
      rec.ocp_objective = cs.ocp_objective;
      rec.alpha_norm = cs.alpha_norm;
      rec.mu_norm = cs.mu_norm;
      rec.solver_iterations = cs.iterations;
      rec.solver_status = qp::to_string(cs.solver_status);
    } catch (const deepc::ControlError& e) {
      rec.fallback = true;
      rec.solver_status = qp::to_string(e.status());
      if (++res.solver_failures > cfg.max_solver_failures) {
        res.failed = true;
        res.failure_reason = "solver failures exceeded budget at step " + std::to_string(k);
        break;
      }
    }

    Vec2 u = u_opt;
    if (cfg.strategy == Strategy::AlwaysUpdate) {
      const double b = *cfg.excitation_bound;
      rec.excitation = Vec2(excitation.uniform(-b, b), excitation.uniform(-b, b));
      const Vec2 raw = u_opt + rec.excitation;
      const Vec2 lo = (u_prev.array() - cc.du_max).max(-cc.u_max);
      const Vec2 hi = (u_prev.array() + cc.du_max).min(cc.u_max);
      u = raw.cwiseMax(lo).cwiseMin(hi);
      rec.clipped = (u != raw);
    }
    rec.u_optimal = u_opt;
    rec.u_applied = u;
    rec.theta = state.theta;
    rec.y = plant::measure(state, noise);
    rec.stage_cost = deepc::stage_cost(cc, u, u_prev, rec.y, rec.reference);
    res.J_tot += rec.stage_cost;

    try {
      state = plant::step(cfg.robot, state, u, cfg.dt, cfg.substeps);
    } catch (const std::exception& e) {
      res.log.push_back(rec);
      res.failed = true;
      res.failure_reason = std::string("plant: ") + e.what() + " at step " + std::to_string(k);
      break;
    }

    adapter.record_step(u, rec.y);
    switch (cfg.strategy) {
      case Strategy::ProposedMethod: {
        UpdateDecision d = adapter.decide_and_update();
        d.step = k;
        rec.decision = d;
        res.decisions.push_back(d);
        break;
      }
      case Strategy::AlwaysUpdate:
        adapter.force_update();
        break;
      case Strategy::NeverUpdate:
        break;
    }
    res.log.push_back(std::move(rec));
    u_prev = u;
  }
  return res;
}

double recompute_total_cost(const ScenarioConfig& cfg, const EpisodeResult& ep) {
  double total = 0.0;
  Vec2 u_prev = ep.u_initial_prev;
  for (const auto& r : ep.log) {
    total += deepc::stage_cost(cfg.controller, r.u_applied, u_prev, r.y, r.reference);
    u_prev = r.u_applied;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Monte Carlo

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

MonteCarloSummary summarize(const std::vector<Strategy>& strategies,
                            const std::vector<EpisodeResult>& episodes) {
  MonteCarloSummary out;
  for (auto s : strategies) {
    StrategySummary ss;
    ss.strategy = s;
    for (const auto& ep : episodes) {
      if (ep.strategy != s) continue;
      if (ep.failed) {
        ++ss.failures;
      } else {
        ss.costs.push_back(ep.J_tot);
      }
    }
    if (ss.failures > 0) {
      out.warnings.push_back(std::string(short_name(s)) + ": " + std::to_string(ss.failures) +
                             " failed run(s) excluded from the cost statistics");
    }
    if (!ss.costs.empty()) {
      ss.median = quantile(ss.costs, 0.5);
      ss.q1 = quantile(ss.costs, 0.25);
      ss.q3 = quantile(ss.costs, 0.75);
      ss.min = *std::min_element(ss.costs.begin(), ss.costs.end());
      ss.max = *std::max_element(ss.costs.begin(), ss.costs.end());
    }
    out.strategies.push_back(std::move(ss));
  }
  return out;
}

MonteCarloResult run_monte_carlo(const ExperimentConfig& cfg, int workers) {
  cfg.validate();
  struct Job {
    Strategy strategy;
    int run;
  };
  std::vector<Job> jobs;
  for (auto s : cfg.strategies) {
    for (int r = 0; r < cfg.runs; ++r) jobs.push_back({s, r});
  }
  MonteCarloResult out;
  out.episodes.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const auto& job = jobs[i];
      out.episodes[i] = run_episode(cfg.scenario_for(job.strategy),
                                    episode_seeds(cfg.master_seed, job.run), job.run);
    }
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
  if (n == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(work);
  }
  out.summary = summarize(cfg.strategies, out.episodes);
  return out;
}

// ---------------------------------------------------------------------------
// Export

namespace {

json vec_json(const Vec2& v) { return json::array({v(0), v(1)}); }

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << std::setprecision(17);
  return os;
}

std::string episode_stem(const EpisodeResult& ep) {
  std::ostringstream s;
  s << short_name(ep.strategy) << "_run" << std::setw(3) << std::setfill('0') << ep.run;
  return s.str();
}

}  // namespace

json step_to_json(const StepRecord& r) {
  json j = {
      {"step", r.step},
      {"u_applied", vec_json(r.u_applied)},
      {"u_optimal", vec_json(r.u_optimal)},
      {"excitation", vec_json(r.excitation)},
      {"y", vec_json(r.y)},
      {"theta", vec_json(r.theta)},
      {"reference", vec_json(r.reference)},
      {"stage_cost", r.stage_cost},
      {"objective", r.ocp_objective},
      {"alpha_norm", r.alpha_norm},
      {"mu_norm", r.mu_norm},
      {"solver_iterations", r.solver_iterations},
      {"solver_status", r.solver_status},
      {"fallback", r.fallback},
      {"clipped", r.clipped},
  };
  if (r.decision) {
    j["decision"] = {{"accepted", r.decision->accepted},
                     {"robust_rank", r.decision->robust_rank},
                     {"required_rank", r.decision->required_rank}};
  } else {
    j["decision"] = nullptr;
  }
  return j;
}

void export_results(const ExperimentConfig& cfg, const MonteCarloSummary& summary,
                    const std::vector<EpisodeResult>& episodes, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir / "episodes", ec);
  if (!ec) fs::create_directories(out_dir / "decisions", ec);
  if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());

  {
    auto os = open_out(out_dir / "results.csv");
    os << "strategy,run,J_tot,failed\n";
    for (const auto& ep : episodes) {
      os << short_name(ep.strategy) << ',' << ep.run << ',' << ep.J_tot << ',' << (ep.failed ? 1 : 0)
         << '\n';
    }
  }
  {
    auto os = open_out(out_dir / "summary.csv");
    os << "strategy,successful_runs,failures,median,q1,q3,min,max\n";
    for (const auto& s : summary.strategies) {
      os << short_name(s.strategy) << ',' << s.costs.size() << ',' << s.failures << ',' << s.median
         << ',' << s.q1 << ',' << s.q3 << ',' << s.min << ',' << s.max << '\n';
    }
  }
  for (const auto& ep : episodes) {
    auto os = open_out(out_dir / "episodes" / (episode_stem(ep) + ".jsonl"));
    for (const auto& r : ep.log) os << step_to_json(r).dump() << '\n';
    if (ep.strategy == Strategy::ProposedMethod) {
      auto ds = open_out(out_dir / "decisions" / (episode_stem(ep) + ".csv"));
      write_decision_log(ds, ep.decisions);
    }
  }

  json runs = json::array();
  for (int r = 0; r < cfg.runs; ++r) {
    const auto s = episode_seeds(cfg.master_seed, r);
    runs.push_back({{"run", r}, {"data_seed", s.data}, {"noise_seed", s.noise}, {"excitation_seed", s.excitation}});
  }
  json failures = json::array();
  for (const auto& ep : episodes) {
    if (ep.failed) failures.push_back({{"strategy", short_name(ep.strategy)}, {"run", ep.run}, {"reason", ep.failure_reason}});
  }
  json manifest = {{"version", kVersion}, {"config", to_json(cfg)}, {"seeds", runs},
                   {"failures", failures}, {"warnings", summary.warnings}};
  auto os = open_out(out_dir / "manifest.json");
  os << manifest.dump(2) << '\n';
}

}  // namespace ddc::harness
