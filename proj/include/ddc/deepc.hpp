#pragma once

// Regularized data-enabled predictive control. Each step solves
//
//   min  sum_i ||y_i - r_i||_Q^2 + ||u_i||_R^2 + ||u_i - u_{i-1}||_Rd^2
//        + lambda_alpha ||alpha||^2 + lambda_mu ||mu||^2
//   s.t. [u_p; u_f; y_p + mu; y_f] = [H_u; H_y] alpha
//        ||u_f||_inf <= u_max,  ||u_i - u_{i-1}||_inf <= du_max
//
// over z = (u_f, y_f, alpha, mu) with u_{-1} the previously applied input, and
// applies only the first predicted input.

#include <optional>
#include <stdexcept>

#include "ddc/behavior.hpp"
#include "ddc/qp.hpp"

namespace ddc::deepc {

struct ControllerConfig {
  Eigen::Index past_horizon = 4;     ///< T_p
  Eigen::Index future_horizon = 10;  ///< T_f
  Matrix Q;        ///< p x p output weight
  Matrix R;        ///< m x m input weight
  Matrix R_delta;  ///< m x m input-rate weight
  double lambda_alpha = 5e-5;
  double lambda_mu = 1e3;
  double u_max = 5.0;
  double du_max = 1.0;
  std::optional<Eigen::Index> svd_truncation;  ///< rank for truncated-SVD preconditioning
  qp::Settings solver{};

  Eigen::Index depth() const { return past_horizon + future_horizon; }
  /// Throws std::invalid_argument on bad horizons, weights or bounds.
  void validate(Eigen::Index m, Eigen::Index p) const;
};

/// Weights and tolerances of the two-link tracking study.
ControllerConfig robot_arm_config();

/// Offsets of each block inside the decision vector z.
struct OcpLayout {
  Eigen::Index m = 0, p = 0, past = 0, future = 0, columns = 0;

  Eigen::Index u_offset() const { return 0; }
  Eigen::Index y_offset() const { return m * future; }
  Eigen::Index alpha_offset() const { return (m + p) * future; }
  Eigen::Index mu_offset() const { return alpha_offset() + columns; }
  Eigen::Index dim() const { return mu_offset() + p * past; }
};

struct Ocp {
  qp::QpProblem qp;
  double objective_offset = 0.0;  ///< constant dropped from the QP objective
  OcpLayout layout;
};

/// past_inputs m x T_p, past_outputs p x T_p, reference p x T_f (columns r_k ... r_{k+T_f-1}).
Ocp build_ocp(const DataMatrix& dm, const Matrix& past_inputs, const Matrix& past_outputs,
              const Vector& prev_input, const Matrix& reference, const ControllerConfig& cfg);

/// Best rank-r approximation of the data matrix (same shape).
DataMatrix truncate_data_matrix(const DataMatrix& dm, Eigen::Index rank);

/// l(u, y) = ||y - r||_Q^2 + ||u||_R^2 + ||u - u_prev||_Rd^2
double stage_cost(const ControllerConfig& cfg, const Vector& u, const Vector& u_prev,
                  const Vector& y, const Vector& r);

struct History {
  Matrix past_inputs;   ///< m x T_p, oldest first
  Matrix past_outputs;  ///< p x T_p
  Vector prev_input;    ///< u_{k-1}
};

struct ControlStep {
  Vector u_applied;
  Matrix predicted_inputs;   ///< m x T_f
  Matrix predicted_outputs;  ///< p x T_f
  double alpha_norm = 0.0;
  double mu_norm = 0.0;
  double ocp_objective = 0.0;
  qp::Status solver_status = qp::Status::MaxIterations;
  int iterations = 0;
  double kkt_residual = 0.0;
};

/// Raised when the QP does not return Optimal; carries the solver status.
class ControlError : public std::runtime_error {
 public:
  ControlError(const std::string& what, qp::Status status)
      : std::runtime_error(what), status_(status) {}
  qp::Status status() const { return status_; }

 private:
  qp::Status status_;
};

ControlStep compute_control(const Dataset& dataset, const History& history,
                            const Matrix& reference, const ControllerConfig& cfg,
                            const std::optional<qp::WarmStart>& warm_start = std::nullopt,
                            qp::WarmStart* solution_out = nullptr);

/// compute_control with a warm-start cache carried across steps of one loop.
class Controller {
 public:
  explicit Controller(ControllerConfig cfg) : cfg_(std::move(cfg)) {}

  const ControllerConfig& config() const { return cfg_; }
  ControlStep step(const Dataset& dataset, const History& history, const Matrix& reference);
  void reset() { warm_.reset(); }

 private:
  ControllerConfig cfg_;
  std::optional<qp::WarmStart> warm_;
};

}  // namespace ddc::deepc
