#include "ddc/adapter.hpp"

#include <ostream>
#include <stdexcept>
#include <string>
#include <type_traits>

#include "ddc/robust_rank.hpp"

namespace ddc {

const char* to_string(DecisionReason reason) {
  switch (reason) {
    case DecisionReason::Accepted:
      return "accepted";
    case DecisionReason::RankDeficient:
      return "rank_deficient";
    case DecisionReason::WarmUp:
      return "warm_up";
  }
  return "unknown";
}

OnlineAdapter::OnlineAdapter(Dataset initial, const InitPolicy& policy, double rho,
                             Eigen::Index n_estimate)
    : dataset_(std::move(initial)), rho_(rho), n_estimate_(n_estimate) {
  if (rho_ < 0.0) throw std::invalid_argument("adapter: rho must be nonnegative");
  if (n_estimate_ < 1) throw std::invalid_argument("adapter: n_estimate must be positive");
  const auto L = dataset_.depth();
  for (const auto& t : dataset_.trajectories()) {
    if (t.length() != L) {
      throw std::invalid_argument("adapter: every trajectory must have length L = " +
                                  std::to_string(L));
    }
  }
  if (dataset_.size() < required_rank()) {
    throw std::invalid_argument("adapter: N = " + std::to_string(dataset_.size()) +
                                " trajectories is below the lower bound n + m*L = " +
                                std::to_string(required_rank()));
  }

  const auto m = dataset_.input_dim();
  const auto p = dataset_.output_dim();
  window_u_.resize(m, L);
  window_y_.resize(p, L);
  std::visit(
      [&](const auto& pol) {
        using P = std::decay_t<decltype(pol)>;
        if constexpr (std::is_same_v<P, init_policy::FromDataTail>) {
          const auto& last = dataset_.trajectories().back();
          window_u_ = last.inputs().rightCols(L);
          window_y_ = last.outputs().rightCols(L);
        } else {
          if (pol.input.size() != m || pol.output.size() != p) {
            throw DimensionError("adapter: seed sample dimensions do not match dataset");
          }
          window_u_ = pol.input.replicate(1, L);
          window_y_ = pol.output.replicate(1, L);
        }
      },
      policy);
  head_ = 0;
  filled_ = L;
  seeded_ = L;
}

Eigen::Index OnlineAdapter::required_rank() const {
  return n_estimate_ + dataset_.input_dim() * dataset_.depth();
}

Trajectory OnlineAdapter::recent_window() const {
  const auto L = depth();
  Matrix u(window_u_.rows(), filled_);
  Matrix y(window_y_.rows(), filled_);
  for (Eigen::Index k = 0; k < filled_; ++k) {
    const auto slot = (head_ + k) % L;
    u.col(k) = window_u_.col(slot);
    y.col(k) = window_y_.col(slot);
  }
  return Trajectory(std::move(u), std::move(y));
}

void OnlineAdapter::record_step(const Vector& u, const Vector& y) {
  if (u.size() != window_u_.rows() || y.size() != window_y_.rows()) {
    throw DimensionError("record_step: sample dimensions do not match dataset");
  }
  const auto L = depth();
  if (filled_ < L) {
    const auto slot = (head_ + filled_) % L;
    window_u_.col(slot) = u;
    window_y_.col(slot) = y;
    ++filled_;
  } else {
    window_u_.col(head_) = u;
    window_y_.col(head_) = y;
    head_ = (head_ + 1) % L;
    if (seeded_ > 0) --seeded_;
  }
  ++step_count_;
}

Dataset OnlineAdapter::propose_candidate() const {
  if (!window_full()) throw std::logic_error("propose_candidate: recent window not yet full");
  const auto& old = dataset_.trajectories();
  std::vector<Trajectory> next(old.begin() + 1, old.end());
  next.push_back(recent_window());
  return Dataset(std::move(next), depth());
}

UpdateDecision OnlineAdapter::decide_and_update() {
  UpdateDecision d;
  d.step = step_count_;
  d.required_rank = required_rank();
  d.seeded_samples = seeded_;
  if (!window_full()) {
    d.reason = DecisionReason::WarmUp;
    return d;
  }
  Dataset candidate = propose_candidate();
  const Matrix h = build_mosaic_hankel(candidate).entries;
  const SingularSpectrum spectrum = singular_spectrum(h);
  d.robust_rank = robustified_rank(spectrum, h, rho_);
  const auto r = d.required_rank;
  d.sigma_at_required = r <= spectrum.size() ? spectrum.sigma(r) : 0.0;
  d.sigma_after_required = r + 1 <= spectrum.size() ? spectrum.sigma(r + 1) : 0.0;
  d.accepted = d.robust_rank >= r;
  d.reason = d.accepted ? DecisionReason::Accepted : DecisionReason::RankDeficient;
  if (d.accepted) dataset_ = std::move(candidate);
  return d;
}

void OnlineAdapter::force_update() { dataset_ = propose_candidate(); }

void write_decision_log(std::ostream& os, const std::vector<UpdateDecision>& decisions) {
  const auto old_precision = os.precision(17);
  os << "step,accepted,robust_rank,required_rank,sigma_at_required,sigma_after_required\n";
  for (const auto& d : decisions) {
    os << d.step << ',' << (d.accepted ? 1 : 0) << ',' << d.robust_rank << ',' << d.required_rank
       << ',' << d.sigma_at_required << ',' << d.sigma_after_required << '\n';
  }
  os.precision(old_precision);
}

}  // namespace ddc
