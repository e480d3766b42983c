#include "ddc/robust_rank.hpp"

#include <algorithm>
#include <string>

#include <Eigen/SVD>

#include "ddc/behavior.hpp"

namespace ddc {

SingularSpectrum singular_spectrum(const Matrix& m) {
  if (m.size() == 0) throw DimensionError("singular_spectrum: empty matrix");
  Eigen::BDCSVD<Matrix> svd(m);
  return SingularSpectrum{svd.singularValues()};
}

Eigen::Index robustified_rank(const SingularSpectrum& spectrum, const Matrix& m, double rho) {
  if (rho < 0.0) throw std::invalid_argument("robustified_rank: rho must be nonnegative");
  if (spectrum.size() == 0) return 0;
  const double cutoff = std::max(rho, default_rank_tolerance(m, spectrum.values(0)));
  return (spectrum.values.array() > cutoff).count();
}

Eigen::Index robustified_rank(const Matrix& m, double rho) {
  return robustified_rank(singular_spectrum(m), m, rho);
}

std::optional<ThresholdWindow> threshold_window(const SingularSpectrum& spectrum,
                                                Eigen::Index required_rank) {
  const auto k = spectrum.size();
  if (required_rank < 1 || required_rank > k) {
    throw DimensionError("threshold_window: required rank " + std::to_string(required_rank) +
                         " outside [1, " + std::to_string(k) + "]");
  }
  ThresholdWindow w;
  w.upper = spectrum.sigma(required_rank);
  w.lower = required_rank == k ? 0.0 : spectrum.sigma(required_rank + 1);
  if (!(w.upper > w.lower)) return std::nullopt;
  return w;
}

std::optional<ThresholdWindow> threshold_window(const Matrix& m, Eigen::Index required_rank) {
  return threshold_window(singular_spectrum(m), required_rank);
}

}  // namespace ddc
