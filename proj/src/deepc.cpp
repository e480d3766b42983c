#include "ddc/deepc.hpp"

#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace ddc::deepc {
namespace {

bool is_psd(const Matrix& w, Eigen::Index dim) {
  if (w.rows() != dim || w.cols() != dim) return false;
  if ((w - w.transpose()).lpNorm<Eigen::Infinity>() > 1e-12 * (1.0 + w.lpNorm<Eigen::Infinity>())) {
    return false;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(w, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -1e-12 * (1.0 + w.lpNorm<Eigen::Infinity>());
}

}  // namespace

void ControllerConfig::validate(Eigen::Index m, Eigen::Index p) const {
  if (past_horizon < 1 || future_horizon < 1) {
    throw std::invalid_argument("controller: horizons must be at least 1");
  }
  if (!is_psd(Q, p)) throw std::invalid_argument("controller: Q must be p x p and PSD");
  if (!is_psd(R, m)) throw std::invalid_argument("controller: R must be m x m and PSD");
  if (!is_psd(R_delta, m)) throw std::invalid_argument("controller: R_delta must be m x m and PSD");
  if (!(lambda_alpha > 0.0) || !(lambda_mu > 0.0)) {
    throw std::invalid_argument("controller: regularization weights must be positive");
  }
  if (!(u_max > 0.0) || !(du_max > 0.0)) {
    throw std::invalid_argument("controller: input bounds must be positive");
  }
}

ControllerConfig robot_arm_config() {
  ControllerConfig cfg;
  cfg.past_horizon = 4;
  cfg.future_horizon = 10;
  cfg.Q = Eigen::Vector2d(1.0, 1.0).asDiagonal();
  cfg.R = 1e-5 * Matrix(Eigen::Vector2d(1.0, 2.0).asDiagonal());
  cfg.R_delta = 1e-4 * Matrix(Eigen::Vector2d(2.0, 4.0).asDiagonal());
  cfg.lambda_alpha = 5e-5;
  cfg.lambda_mu = 1e3;
  cfg.u_max = 5.0;
  cfg.du_max = 1.0;
  cfg.solver.tol = 1e-6;
  return cfg;
}

Ocp build_ocp(const DataMatrix& dm, const Matrix& past_inputs, const Matrix& past_outputs,
              const Vector& prev_input, const Matrix& reference, const ControllerConfig& cfg) {
  const auto m = dm.input_dim;
  const auto p = dm.output_dim;
  const auto Tp = cfg.past_horizon;
  const auto Tf = cfg.future_horizon;
  const auto L = Tp + Tf;
  if (dm.depth != L) {
    throw DimensionError("build_ocp: data matrix depth " + std::to_string(dm.depth) +
                         " != T_p + T_f = " + std::to_string(L));
  }
  if (past_inputs.rows() != m || past_inputs.cols() != Tp || past_outputs.rows() != p ||
      past_outputs.cols() != Tp) {
    throw DimensionError("build_ocp: past window must be m x T_p and p x T_p");
  }
  if (prev_input.size() != m) throw DimensionError("build_ocp: previous input must have length m");
  if (reference.rows() != p || reference.cols() != Tf) {
    throw DimensionError("build_ocp: reference must be p x T_f");
  }
  cfg.validate(m, p);

  Ocp ocp;
  auto& lay = ocp.layout;
  lay.m = m;
  lay.p = p;
  lay.past = Tp;
  lay.future = Tf;
  lay.columns = dm.cols();
  const auto d = lay.dim();
  auto& qp = ocp.qp;

  // Objective, written as 1/2 z'Hz + f'z (+ offset).
  qp.H = Matrix::Zero(d, d);
  qp.f = Vector::Zero(d);
  const Matrix Q2 = 2.0 * cfg.Q;
  const Matrix Rd2 = 2.0 * cfg.R_delta;
  for (Eigen::Index i = 0; i < Tf; ++i) {
    const auto yi = lay.y_offset() + i * p;
    const auto ui = lay.u_offset() + i * m;
    qp.H.block(yi, yi, p, p) += Q2;
    qp.f.segment(yi, p) -= Q2 * reference.col(i);
    qp.H.block(ui, ui, m, m) += 2.0 * cfg.R + Rd2;
    if (i == 0) {
      qp.f.segment(ui, m) -= Rd2 * prev_input;
    } else {
      const auto uprev = ui - m;
      qp.H.block(uprev, uprev, m, m) += Rd2;
      qp.H.block(ui, uprev, m, m) -= Rd2;
      qp.H.block(uprev, ui, m, m) -= Rd2;
    }
    ocp.objective_offset += reference.col(i).dot(cfg.Q * reference.col(i));
  }
  ocp.objective_offset += prev_input.dot(cfg.R_delta * prev_input);
  qp.H.diagonal().segment(lay.alpha_offset(), lay.columns).array() += 2.0 * cfg.lambda_alpha;
  qp.H.diagonal().segment(lay.mu_offset(), p * Tp).array() += 2.0 * cfg.lambda_mu;

  // Data-matrix relation, one row per entry of [u_p; u_f; y_p; y_f].
  const auto rows = (m + p) * L;
  qp.A_eq = Matrix::Zero(rows, d);
  qp.b_eq = Vector::Zero(rows);
  qp.A_eq.middleCols(lay.alpha_offset(), lay.columns) = dm.entries;
  const auto up_rows = m * Tp;
  const auto uf_rows = m * Tf;
  const auto yp_rows = p * Tp;
  const auto yf_rows = p * Tf;
  qp.b_eq.head(up_rows) = past_inputs.reshaped();
  for (Eigen::Index j = 0; j < uf_rows; ++j) qp.A_eq(up_rows + j, lay.u_offset() + j) = -1.0;
  for (Eigen::Index j = 0; j < yp_rows; ++j) qp.A_eq(m * L + j, lay.mu_offset() + j) = -1.0;
  qp.b_eq.segment(m * L, yp_rows) = past_outputs.reshaped();
  for (Eigen::Index j = 0; j < yf_rows; ++j) {
    qp.A_eq(m * L + yp_rows + j, lay.y_offset() + j) = -1.0;
  }

  // Two-sided amplitude and rate bounds.
  const auto nu = m * Tf;
  qp.A_in = Matrix::Zero(4 * nu, d);
  qp.b_in = Vector::Zero(4 * nu);
  for (Eigen::Index j = 0; j < nu; ++j) {
    qp.A_in(j, lay.u_offset() + j) = 1.0;
    qp.A_in(nu + j, lay.u_offset() + j) = -1.0;
    qp.b_in(j) = cfg.u_max;
    qp.b_in(nu + j) = cfg.u_max;
  }
  for (Eigen::Index i = 0; i < Tf; ++i) {
    for (Eigen::Index c = 0; c < m; ++c) {
      const auto j = i * m + c;
      const auto up = 2 * nu + j;
      const auto down = 3 * nu + j;
      qp.A_in(up, lay.u_offset() + j) = 1.0;
      qp.A_in(down, lay.u_offset() + j) = -1.0;
      if (i == 0) {
        qp.b_in(up) = cfg.du_max + prev_input(c);
        qp.b_in(down) = cfg.du_max - prev_input(c);
      } else {
        qp.A_in(up, lay.u_offset() + j - m) = -1.0;
        qp.A_in(down, lay.u_offset() + j - m) = 1.0;
        qp.b_in(up) = cfg.du_max;
        qp.b_in(down) = cfg.du_max;
      }
    }
  }
  return ocp;
}

DataMatrix truncate_data_matrix(const DataMatrix& dm, Eigen::Index rank) {
  const auto k = std::min(dm.entries.rows(), dm.entries.cols());
  if (rank < 0 || rank > k) throw DimensionError("truncate_data_matrix: rank out of range");
  Eigen::BDCSVD<Matrix> svd(dm.entries, Eigen::ComputeThinU | Eigen::ComputeThinV);
  DataMatrix out = dm;
  out.entries = svd.matrixU().leftCols(rank) * svd.singularValues().head(rank).asDiagonal() *
                svd.matrixV().leftCols(rank).transpose();
  return out;
}

double stage_cost(const ControllerConfig& cfg, const Vector& u, const Vector& u_prev,
                  const Vector& y, const Vector& r) {
  const Vector e = y - r;
  const Vector du = u - u_prev;
  return e.dot(cfg.Q * e) + u.dot(cfg.R * u) + du.dot(cfg.R_delta * du);
}

ControlStep compute_control(const Dataset& dataset, const History& history,
                            const Matrix& reference, const ControllerConfig& cfg,
                            const std::optional<qp::WarmStart>& warm_start,
                            qp::WarmStart* solution_out) {
  if (dataset.depth() != cfg.depth()) {
    throw DimensionError("compute_control: dataset depth must equal T_p + T_f");
  }
  DataMatrix dm = build_mosaic_hankel(dataset);
  if (cfg.svd_truncation) dm = truncate_data_matrix(dm, *cfg.svd_truncation);
  const Ocp ocp = build_ocp(dm, history.past_inputs, history.past_outputs, history.prev_input,
                            reference, cfg);

  std::optional<qp::WarmStart> warm;
  if (warm_start && warm_start->z.size() == ocp.layout.dim()) warm = warm_start;
  const qp::QpSolution sol = qp::solve(ocp.qp, cfg.solver, warm);
  if (sol.status != qp::Status::Optimal) {
    throw ControlError(std::string("controller: QP ended with status ") + qp::to_string(sol.status),
                       sol.status);
  }
  if (solution_out != nullptr) {
    *solution_out = qp::WarmStart{sol.z_star, sol.eq_multipliers, sol.in_multipliers};
  }

  const auto& lay = ocp.layout;
  ControlStep out;
  out.predicted_inputs = sol.z_star.segment(lay.u_offset(), lay.m * lay.future).reshaped(lay.m, lay.future);
  out.predicted_outputs = sol.z_star.segment(lay.y_offset(), lay.p * lay.future).reshaped(lay.p, lay.future);
  // First move clipped into the input and rate boxes.
  const Vector lo = (history.prev_input.array() - cfg.du_max).max(-cfg.u_max);
  const Vector hi = (history.prev_input.array() + cfg.du_max).min(cfg.u_max);
  out.u_applied = out.predicted_inputs.col(0).cwiseMax(lo).cwiseMin(hi);
  out.alpha_norm = sol.z_star.segment(lay.alpha_offset(), lay.columns).norm();
  out.mu_norm = sol.z_star.segment(lay.mu_offset(), lay.p * lay.past).norm();
  out.ocp_objective = sol.objective + ocp.objective_offset;
  out.solver_status = sol.status;
  out.iterations = sol.iterations;
  out.kkt_residual = sol.kkt_residual;
  return out;
}

ControlStep Controller::step(const Dataset& dataset, const History& history,
                             const Matrix& reference) {
  qp::WarmStart next;
  try {
    ControlStep out = compute_control(dataset, history, reference, cfg_, warm_, &next);
    warm_ = std::move(next);
    return out;
  } catch (const ControlError&) {
    warm_.reset();
    throw;
  }
}

}  // namespace ddc::deepc
