#include "ddc/behavior.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/SVD>

namespace ddc {

Trajectory::Trajectory(Matrix inputs, Matrix outputs)
    : inputs_(std::move(inputs)), outputs_(std::move(outputs)) {
  if (inputs_.cols() != outputs_.cols()) {
    throw DimensionError("trajectory: inputs have " + std::to_string(inputs_.cols()) +
                         " samples, outputs have " + std::to_string(outputs_.cols()));
  }
  if (inputs_.cols() < 1) throw DimensionError("trajectory: empty");
}

Trajectory Trajectory::slice(Eigen::Index start, Eigen::Index len) const {
  if (start < 0 || len < 1 || start + len > length()) {
    throw DimensionError("trajectory slice out of range");
  }
  return Trajectory(inputs_.middleCols(start, len), outputs_.middleCols(start, len));
}

bool Trajectory::operator==(const Trajectory& other) const {
  return inputs_.rows() == other.inputs_.rows() && inputs_.cols() == other.inputs_.cols() &&
         outputs_.rows() == other.outputs_.rows() && inputs_ == other.inputs_ &&
         outputs_ == other.outputs_;
}

Dataset::Dataset(std::vector<Trajectory> trajectories, Eigen::Index depth)
    : trajectories_(std::move(trajectories)), depth_(depth) {
  if (trajectories_.empty()) throw DimensionError("dataset: no trajectories");
  if (depth_ < 1) throw DimensionError("dataset: depth must be positive");
  const auto m = trajectories_.front().input_dim();
  const auto p = trajectories_.front().output_dim();
  for (std::size_t i = 0; i < trajectories_.size(); ++i) {
    const auto& t = trajectories_[i];
    if (t.input_dim() != m || t.output_dim() != p) {
      throw DimensionError("dataset: trajectory " + std::to_string(i) +
                           " has inconsistent vector dimensions");
    }
    if (t.length() < depth_) {
      throw DimensionError("dataset: trajectory " + std::to_string(i) + " shorter than depth " +
                           std::to_string(depth_));
    }
  }
}

Eigen::Index Dataset::column_count() const {
  Eigen::Index cols = 0;
  for (const auto& t : trajectories_) cols += t.length() - depth_ + 1;
  return cols;
}

bool Dataset::operator==(const Dataset& other) const {
  return depth_ == other.depth_ && trajectories_ == other.trajectories_;
}

LtiSystem::LtiSystem(Matrix a, Matrix b, Matrix c, Matrix d)
    : A(std::move(a)), B(std::move(b)), C(std::move(c)), D(std::move(d)) {
  const auto n = A.rows();
  if (A.cols() != n || B.rows() != n || C.cols() != n || D.rows() != C.rows() ||
      D.cols() != B.cols()) {
    throw DimensionError("LTI system: inconsistent A, B, C, D dimensions");
  }
}

double default_rank_tolerance(const Matrix& m, double sigma_max) {
  return static_cast<double>(std::max(m.rows(), m.cols())) *
         std::numeric_limits<double>::epsilon() * sigma_max;
}

Eigen::Index numeric_rank(const Matrix& m) {
  if (m.size() == 0) return 0;
  Eigen::BDCSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double tol = default_rank_tolerance(m, s(0));
  return (s.array() > tol).count();
}

Matrix build_hankel(const Matrix& seq, Eigen::Index depth) {
  const auto s = seq.rows();
  const auto T = seq.cols();
  if (depth < 1 || depth > T) {
    throw DimensionError("hankel: depth " + std::to_string(depth) + " exceeds sequence length " +
                         std::to_string(T));
  }
  const auto cols = T - depth + 1;
  Matrix h(s * depth, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < depth; ++i) h.block(i * s, j, s, 1) = seq.col(i + j);
  }
  return h;
}

DataMatrix build_mosaic_hankel(const Dataset& dataset) {
  const auto L = dataset.depth();
  const auto m = dataset.input_dim();
  const auto p = dataset.output_dim();
  DataMatrix dm;
  dm.input_dim = m;
  dm.output_dim = p;
  dm.depth = L;
  dm.entries.resize((m + p) * L, dataset.column_count());
  Eigen::Index col = 0;
  for (const auto& t : dataset.trajectories()) {
    const auto cols = t.length() - L + 1;
    dm.entries.block(0, col, m * L, cols) = build_hankel(t.inputs(), L);
    dm.entries.block(m * L, col, p * L, cols) = build_hankel(t.outputs(), L);
    col += cols;
  }
  return dm;
}

bool is_persistently_exciting(const Matrix& inputs, Eigen::Index order) {
  if (order < 1 || order > inputs.cols()) {
    throw DimensionError("persistency of excitation: order out of range");
  }
  const Matrix h = build_hankel(inputs, order);
  // Fewer columns than rows can never reach full row rank.
  if (h.cols() < h.rows()) return false;
  return numeric_rank(h) == inputs.rows() * order;
}

Eigen::Index generalized_pe_rank(const DataMatrix& dm) { return numeric_rank(dm.entries); }

bool check_generalized_pe(const DataMatrix& dm, Eigen::Index state_dim, Eigen::Index input_dim) {
  return generalized_pe_rank(dm) == state_dim + input_dim * dm.depth;
}

MembershipResult trajectory_membership(const DataMatrix& dm, const Matrix& window_inputs,
                                       const Matrix& window_outputs, double tolerance) {
  const auto L = dm.depth;
  if (window_inputs.rows() != dm.input_dim || window_outputs.rows() != dm.output_dim ||
      window_inputs.cols() != L || window_outputs.cols() != L) {
    throw DimensionError("membership: window does not match data matrix");
  }
  if (!(tolerance >= 0.0)) throw std::invalid_argument("membership: tolerance must be nonnegative");
  Vector w(dm.entries.rows());
  w.head(dm.input_dim * L) = window_inputs.reshaped();
  w.tail(dm.output_dim * L) = window_outputs.reshaped();

  MembershipResult out;
  Eigen::BDCSVD<Matrix> svd(dm.entries, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(static_cast<double>(std::max(dm.entries.rows(), dm.entries.cols())) *
                   std::numeric_limits<double>::epsilon());
  out.alpha = svd.solve(w);
  out.residual = (dm.entries * out.alpha - w).norm();
  out.relative_residual = out.residual / (1.0 + w.norm());
  out.member = out.residual <= tolerance * (1.0 + w.norm());
  return out;
}

Matrix simulate_lti(const LtiSystem& sys, const Vector& x0, const Matrix& inputs) {
  if (x0.size() != sys.state_dim() || inputs.rows() != sys.input_dim()) {
    throw DimensionError("simulate_lti: dimension mismatch");
  }
  Matrix y(sys.output_dim(), inputs.cols());
  Vector x = x0;
  for (Eigen::Index k = 0; k < inputs.cols(); ++k) {
    y.col(k) = sys.C * x + sys.D * inputs.col(k);
    x = sys.A * x + sys.B * inputs.col(k);
  }
  return y;
}

Eigen::Index lag(const LtiSystem& sys) {
  const auto n = sys.state_dim();
  const auto p = sys.output_dim();
  Matrix obs(0, n);
  Matrix block = sys.C;
  for (Eigen::Index j = 1; j <= n; ++j) {
    obs.conservativeResize(obs.rows() + p, Eigen::NoChange);
    obs.bottomRows(p) = block;
    if (numeric_rank(obs) == n) return j;
    block = block * sys.A;
  }
  throw std::domain_error("lag: (C, A) is not observable");
}

}  // namespace ddc
