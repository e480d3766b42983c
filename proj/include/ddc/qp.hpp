#pragma once

// Dense convex QP
//
//   minimize    1/2 z' H z + f' z
//   subject to  A_eq z  = b_eq
//               A_in z <= b_in
//
// solved by an operator-splitting (ADMM) scheme with Ruiz equilibration,
// over-relaxation, adaptive step size and a primal infeasibility certificate.
// Whenever the iterates are close, an active-set polish step solves the
// reduced KKT system exactly. Optimal is only reported after the
// independent KKT check in kkt.hpp passes at the requested tolerance.

#include <iosfwd>
#include <optional>
#include <string>

#include "ddc/types.hpp"

namespace ddc::qp {

struct QpProblem {
  Matrix H;
  Vector f;
  Matrix A_eq;
  Vector b_eq;
  Matrix A_in;
  Vector b_in;

  Eigen::Index dim() const { return H.rows(); }
  Eigen::Index num_eq() const { return A_eq.rows(); }
  Eigen::Index num_in() const { return A_in.rows(); }

  /// Throws DimensionError on inconsistent shapes or an asymmetric H.
  void validate() const;
  double objective(const Vector& z) const { return 0.5 * z.dot(H * z) + f.dot(z); }
};

enum class Status { Optimal, Infeasible, MaxIterations };

const char* to_string(Status status);

struct QpSolution {
  Vector z_star;
  Vector eq_multipliers;  ///< lambda, one per equality row
  Vector in_multipliers;  ///< nu >= 0, one per inequality row
  double objective = 0.0;
  Status status = Status::MaxIterations;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool polished = false;
};

struct WarmStart {
  Vector z;
  Vector eq_multipliers;
  Vector in_multipliers;
};

struct Settings {
  double tol = 1e-8;
  int max_iter = 4000;
  double sigma = 1e-6;
  double rho = 0.1;
  double alpha = 1.6;          ///< over-relaxation
  int check_interval = 10;
  int scaling_iterations = 10;
  bool polish = true;
  double infeasibility_tol = 1e-7;
};

QpSolution solve(const QpProblem& problem, const Settings& settings = {},
                 const std::optional<WarmStart>& warm_start = std::nullopt);

/// Convenience overload matching the (problem, tol, max_iter) contract.
QpSolution solve(const QpProblem& problem, double tol, int max_iter);

/// Plain-text dump (matrix-market style array blocks) for offline cross-checks.
void dump_problem(std::ostream& os, const QpProblem& problem);

}  // namespace ddc::qp
