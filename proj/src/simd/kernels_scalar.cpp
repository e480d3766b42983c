#include <algorithm>
#include <cmath>

#include "ddc/simd/kernels.hpp"

namespace ddc::simd {
namespace {

void relax_scalar(std::span<const double> xt, std::span<double> x, double a) {
  const double b = 1.0 - a;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = a * xt[i] + b * x[i];
}

void project_dual_scalar(std::span<const double> zt, std::span<double> z, std::span<double> y,
                         std::span<const double> lo, std::span<const double> hi,
                         std::span<const double> rho, double a) {
  const double b = 1.0 - a;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double zr = a * zt[i] + b * z[i];
    const double v = zr + y[i] / rho[i];
    // Same operand order as _mm256_max_pd / _mm256_min_pd.
    const double clamped_lo = v > lo[i] ? v : lo[i];
    const double zn = clamped_lo < hi[i] ? clamped_lo : hi[i];
    y[i] = y[i] + rho[i] * (zr - zn);
    z[i] = zn;
  }
}

double max_abs_diff_scalar(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_abs_scalar(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

constexpr KernelTable kScalar{Backend::Scalar, relax_scalar, project_dual_scalar,
                              max_abs_diff_scalar, max_abs_scalar};

}  // namespace

const KernelTable& scalar_kernels() { return kScalar; }

}  // namespace ddc::simd
