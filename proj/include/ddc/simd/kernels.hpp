#pragma once

// Elementwise kernels used in the inner loop of the ADMM QP solver.
//
// Every kernel has a portable scalar reference implementation and, on x86-64,
// an AVX2 variant. The variant is chosen once at runtime from CPUID; setting
// DDC_SIMD=scalar in the environment forces the reference path. Elementwise
// kernels are bit-identical across backends (no fused multiply-add); the
// max-abs reductions are order-independent and therefore also exact.

#include <cstddef>
#include <span>

namespace ddc::simd {

enum class Backend { Scalar, Avx2 };

const char* to_string(Backend backend);

struct KernelTable {
  Backend backend;

  /// x <- a * xt + (1 - a) * x
  void (*relax)(std::span<const double> xt, std::span<double> x, double a);

  /// Over-relaxed projection and dual ascent, per row i:
  ///   zr = a * zt + (1 - a) * z
  ///   zn = clamp(zr + y / rho, lo, hi)
  ///   y += rho * (zr - zn);  z = zn
  void (*project_dual)(std::span<const double> zt, std::span<double> z, std::span<double> y,
                       std::span<const double> lo, std::span<const double> hi,
                       std::span<const double> rho, double a);

  /// max_i |a_i - b_i|
  double (*max_abs_diff)(std::span<const double> a, std::span<const double> b);

  /// max_i |a_i|
  double (*max_abs)(std::span<const double> a);
};

/// Portable reference kernels.
const KernelTable& scalar_kernels();

/// AVX2 kernels, or nullptr when not compiled in or not supported by the CPU.
const KernelTable* avx2_kernels();

/// Best supported table (honours DDC_SIMD=scalar).
const KernelTable& active_kernels();

}  // namespace ddc::simd
