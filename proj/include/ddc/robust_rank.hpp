#pragma once

#include <optional>

#include "ddc/types.hpp"

namespace ddc {

/// Singular values in non-increasing order, length min(rows, cols).
struct SingularSpectrum {
  Vector values;

  Eigen::Index size() const { return values.size(); }
  /// 1-based access: sigma(1) is the largest singular value.
  double sigma(Eigen::Index i) const { return values(i - 1); }
};

SingularSpectrum singular_spectrum(const Matrix& m);

/// Number of singular values strictly greater than rho.
///
/// Values at or below the default numeric-rank tolerance never count, so
/// rho = 0 reproduces numeric_rank() instead of counting round-off.
Eigen::Index robustified_rank(const Matrix& m, double rho);
Eigen::Index robustified_rank(const SingularSpectrum& spectrum, const Matrix& m, double rho);

/// Admissible thresholds for recovering `required_rank`: every rho with
/// lower <= rho < upper gives robustified_rank == required_rank.
struct ThresholdWindow {
  double lower = 0.0;  ///< sigma_{r+1} (0 when r is the full dimension)
  double upper = 0.0;  ///< sigma_r

  bool contains(double rho) const { return rho >= lower && rho < upper; }
};

/// Empty when sigma_r does not strictly exceed sigma_{r+1}.
std::optional<ThresholdWindow> threshold_window(const Matrix& m, Eigen::Index required_rank);
std::optional<ThresholdWindow> threshold_window(const SingularSpectrum& spectrum,
                                                Eigen::Index required_rank);

}  // namespace ddc
