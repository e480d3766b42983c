// Compiled with -mavx2 -ffp-contract=off; only reached after a CPUID check.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "ddc/simd/kernels.hpp"

namespace ddc::simd {
namespace {

constexpr std::size_t kLanes = 4;

inline __m256d abs_pd(__m256d v) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v); }

inline double hmax(__m256d v) {
  alignas(32) double lanes[kLanes];
  _mm256_store_pd(lanes, v);
  return std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
}

void relax_avx2(std::span<const double> xt, std::span<double> x, double a) {
  const double b = 1.0 - a;
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(b);
  std::size_t i = 0;
  for (; i + kLanes <= x.size(); i += kLanes) {
    const __m256d t = _mm256_mul_pd(va, _mm256_loadu_pd(xt.data() + i));
    const __m256d o = _mm256_mul_pd(vb, _mm256_loadu_pd(x.data() + i));
    _mm256_storeu_pd(x.data() + i, _mm256_add_pd(t, o));
  }
  for (; i < x.size(); ++i) x[i] = a * xt[i] + b * x[i];
}

void project_dual_avx2(std::span<const double> zt, std::span<double> z, std::span<double> y,
                       std::span<const double> lo, std::span<const double> hi,
                       std::span<const double> rho, double a) {
  const double b = 1.0 - a;
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(b);
  std::size_t i = 0;
  for (; i + kLanes <= z.size(); i += kLanes) {
    const __m256d vz = _mm256_loadu_pd(z.data() + i);
    const __m256d vy = _mm256_loadu_pd(y.data() + i);
    const __m256d vr = _mm256_loadu_pd(rho.data() + i);
    const __m256d zr =
        _mm256_add_pd(_mm256_mul_pd(va, _mm256_loadu_pd(zt.data() + i)), _mm256_mul_pd(vb, vz));
    const __m256d v = _mm256_add_pd(zr, _mm256_div_pd(vy, vr));
    const __m256d zn = _mm256_min_pd(_mm256_max_pd(v, _mm256_loadu_pd(lo.data() + i)),
                                     _mm256_loadu_pd(hi.data() + i));
    _mm256_storeu_pd(y.data() + i, _mm256_add_pd(vy, _mm256_mul_pd(vr, _mm256_sub_pd(zr, zn))));
    _mm256_storeu_pd(z.data() + i, zn);
  }
  for (; i < z.size(); ++i) {
    const double zr = a * zt[i] + b * z[i];
    const double v = zr + y[i] / rho[i];
    const double clamped_lo = v > lo[i] ? v : lo[i];
    const double zn = clamped_lo < hi[i] ? clamped_lo : hi[i];
    y[i] = y[i] + rho[i] * (zr - zn);
    z[i] = zn;
  }
}

double max_abs_diff_avx2(std::span<const double> a, std::span<const double> b) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= a.size(); i += kLanes) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i));
    acc = _mm256_max_pd(acc, abs_pd(d));
  }
  double m = hmax(acc);
  for (; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_abs_avx2(std::span<const double> a) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= a.size(); i += kLanes) acc = _mm256_max_pd(acc, abs_pd(_mm256_loadu_pd(a.data() + i)));
  double m = hmax(acc);
  for (; i < a.size(); ++i) m = std::max(m, std::abs(a[i]));
  return m;
}

constexpr KernelTable kAvx2{Backend::Avx2, relax_avx2, project_dual_avx2, max_abs_diff_avx2,
                            max_abs_avx2};

}  // namespace

const KernelTable& avx2_kernel_table() { return kAvx2; }

}  // namespace ddc::simd
