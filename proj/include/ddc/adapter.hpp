#pragma once

// Online adaptation of the data-driven representation. The adapter keeps a
// dataset of N trajectories of length L and a FIFO of the last L recorded
// samples. Each step the FIFO becomes a candidate trajectory that replaces the
// oldest one, and the candidate is accepted only if the robustified rank of
// its stacked input/output mosaic Hankel matrix reaches n + m*L.

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "ddc/behavior.hpp"

namespace ddc {

namespace init_policy {
/// Seed the window with the last L samples of the final dataset trajectory.
struct FromDataTail {};
/// Seed with L copies of a known steady-state pair.
struct ArtificialSteadyState {
  Vector input;
  Vector output;
};
/// Seed with L copies of arbitrary values; predictions settle after L steps.
struct Constant {
  Vector input;
  Vector output;
};
}  // namespace init_policy

using InitPolicy =
    std::variant<init_policy::FromDataTail, init_policy::ArtificialSteadyState, init_policy::Constant>;

enum class DecisionReason { Accepted, RankDeficient, WarmUp };

const char* to_string(DecisionReason reason);

struct UpdateDecision {
  bool accepted = false;
  Eigen::Index robust_rank = 0;
  Eigen::Index required_rank = 0;
  long step = 0;
  double sigma_at_required = 0.0;     ///< sigma_{required_rank} of the candidate
  double sigma_after_required = 0.0;  ///< sigma_{required_rank + 1}, 0 if absent
  Eigen::Index seeded_samples = 0;    ///< window samples that predate the first record
  DecisionReason reason = DecisionReason::RankDeficient;
};

class OnlineAdapter {
 public:
  /// Throws std::invalid_argument if any trajectory is not exactly depth-long
  /// or if N < n_estimate + m * L.
  OnlineAdapter(Dataset initial, const InitPolicy& policy, double rho, Eigen::Index n_estimate);

  const Dataset& dataset() const { return dataset_; }
  double rho() const { return rho_; }
  Eigen::Index n_estimate() const { return n_estimate_; }
  Eigen::Index required_rank() const;
  long step_count() const { return step_count_; }
  Eigen::Index depth() const { return dataset_.depth(); }

  bool window_full() const { return filled_ == depth(); }
  /// Recent window in chronological order (oldest first).
  Trajectory recent_window() const;

  void record_step(const Vector& u, const Vector& y);

  /// Dataset with the oldest trajectory dropped and the recent window appended.
  /// Throws std::logic_error while the window is not full.
  Dataset propose_candidate() const;

  /// Rank test on the candidate; replaces the dataset on acceptance. During
  /// warm-up returns a rejected record with reason WarmUp.
  UpdateDecision decide_and_update();

  /// Unconditional replacement (continuous sliding-window updating).
  void force_update();

 private:
  Dataset dataset_;
  double rho_;
  Eigen::Index n_estimate_;
  Matrix window_u_;  // ring buffer, m x L
  Matrix window_y_;  // p x L
  Eigen::Index head_ = 0;    // slot of the oldest sample
  Eigen::Index filled_ = 0;
  Eigen::Index seeded_ = 0;  // seeded samples still in the window
  long step_count_ = 0;
};

/// CSV with header step,accepted,robust_rank,required_rank,sigma_at_required,sigma_after_required.
void write_decision_log(std::ostream& os, const std::vector<UpdateDecision>& decisions);

}  // namespace ddc
