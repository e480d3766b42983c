#include "ddc/kkt.hpp"

#include <algorithm>

namespace ddc::qp {
namespace {

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

}  // namespace

double KktReport::max() const {
  return std::max({stationarity, eq_violation, in_violation, dual_violation, complementarity});
}

KktReport check_kkt(const QpProblem& problem, const Vector& z, const Vector& eq_multipliers,
                    const Vector& in_multipliers) {
  KktReport r;
  const Vector hz = problem.H * z;
  Vector grad = hz + problem.f;
  if (problem.num_eq() > 0) grad.noalias() += problem.A_eq.transpose() * eq_multipliers;
  if (problem.num_in() > 0) grad.noalias() += problem.A_in.transpose() * in_multipliers;
  r.stationarity = inf_norm(grad) / (1.0 + std::max(inf_norm(hz), inf_norm(problem.f)));

  if (problem.num_eq() > 0) {
    r.eq_violation = inf_norm(problem.A_eq * z - problem.b_eq) / (1.0 + inf_norm(problem.b_eq));
  }
  if (problem.num_in() > 0) {
    const Vector slack = problem.b_in - problem.A_in * z;
    r.in_violation = std::max(0.0, -slack.minCoeff()) / (1.0 + inf_norm(problem.b_in));
    r.dual_violation = std::max(0.0, -in_multipliers.minCoeff());
    r.complementarity = inf_norm(in_multipliers.cwiseProduct(slack));
  }
  return r;
}

}  // namespace ddc::qp
