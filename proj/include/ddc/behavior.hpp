#pragma once

// Behavioral (trajectory-based) representation of linear systems: Hankel and
// mosaic Hankel data matrices, excitation/rank conditions and membership tests.
//
// Sequences are stored column-wise: a sequence of T vectors of dimension s is
// an s x T matrix whose column k is sample k. Documentation below uses 1-based
// block indices to match the usual Hankel notation; storage is 0-based.

#include <vector>

#include "ddc/types.hpp"

namespace ddc {

/// Paired input/output sequence of equal length.
class Trajectory {
 public:
  Trajectory() = default;
  /// inputs: m x T, outputs: p x T. Throws DimensionError on mismatch or T == 0.
  Trajectory(Matrix inputs, Matrix outputs);

  const Matrix& inputs() const { return inputs_; }
  const Matrix& outputs() const { return outputs_; }
  Eigen::Index length() const { return inputs_.cols(); }
  Eigen::Index input_dim() const { return inputs_.rows(); }
  Eigen::Index output_dim() const { return outputs_.rows(); }

  /// Samples [start, start + len).
  Trajectory slice(Eigen::Index start, Eigen::Index len) const;

  bool operator==(const Trajectory& other) const;

 private:
  Matrix inputs_;
  Matrix outputs_;
};

/// Ordered trajectories sharing dimensions, each at least `depth` long.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<Trajectory> trajectories, Eigen::Index depth);

  const std::vector<Trajectory>& trajectories() const { return trajectories_; }
  Eigen::Index depth() const { return depth_; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(trajectories_.size()); }
  Eigen::Index input_dim() const { return trajectories_.front().input_dim(); }
  Eigen::Index output_dim() const { return trajectories_.front().output_dim(); }
  /// Sum over trajectories of (T_i - depth + 1).
  Eigen::Index column_count() const;

  bool operator==(const Dataset& other) const;

 private:
  std::vector<Trajectory> trajectories_;
  Eigen::Index depth_ = 0;
};

/// Input block (m*L rows) stacked over output block (p*L rows).
struct DataMatrix {
  Matrix entries;
  Eigen::Index input_dim = 0;
  Eigen::Index output_dim = 0;
  Eigen::Index depth = 0;

  Eigen::Index cols() const { return entries.cols(); }
  auto input_block() const { return entries.topRows(input_dim * depth); }
  auto output_block() const { return entries.bottomRows(output_dim * depth); }
};

struct LtiSystem {
  Matrix A, B, C, D;

  LtiSystem() = default;
  /// Throws DimensionError if the four matrices are inconsistent.
  LtiSystem(Matrix a, Matrix b, Matrix c, Matrix d);

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index input_dim() const { return B.cols(); }
  Eigen::Index output_dim() const { return C.rows(); }
};

/// Default tolerance for numeric rank: max(rows, cols) * eps * sigma_max.
double default_rank_tolerance(const Matrix& m, double sigma_max);

/// Number of singular values above default_rank_tolerance.
Eigen::Index numeric_rank(const Matrix& m);

/// Hankel matrix of depth L for an s x T sequence; block (i, j) = seq[i + j - 1].
Matrix build_hankel(const Matrix& seq, Eigen::Index depth);

/// Per-trajectory Hankel matrices concatenated in dataset order, inputs over outputs.
DataMatrix build_mosaic_hankel(const Dataset& dataset);

/// True iff the depth-`order` input Hankel matrix has full row rank m * order.
bool is_persistently_exciting(const Matrix& inputs, Eigen::Index order);

Eigen::Index generalized_pe_rank(const DataMatrix& dm);
/// rank(dm) == n + m * L
bool check_generalized_pe(const DataMatrix& dm, Eigen::Index state_dim, Eigen::Index input_dim);

struct MembershipResult {
  bool member = false;
  double residual = 0.0;           ///< ||H alpha - w||_2
  double relative_residual = 0.0;  ///< residual / (1 + ||w||_2)
  Vector alpha;
};

/// Minimum-norm least-squares fit of an L-window (inputs m x L, outputs p x L)
/// by the columns of dm. Member iff residual <= tolerance * (1 + ||w||).
MembershipResult trajectory_membership(const DataMatrix& dm, const Matrix& window_inputs,
                                       const Matrix& window_outputs, double tolerance);

/// y_k = C x_k + D u_k, x_{k+1} = A x_k + B u_k. Returns p x T outputs.
Matrix simulate_lti(const LtiSystem& sys, const Vector& x0, const Matrix& inputs);

/// Smallest j with rank col(C, CA, ..., CA^{j-1}) = n. Throws std::domain_error
/// if (C, A) is unobservable.
Eigen::Index lag(const LtiSystem& sys);

}  // namespace ddc
