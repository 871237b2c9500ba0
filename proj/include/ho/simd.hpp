#pragma once

// Vector kernels used by the network and optimizer inner loops.
//
// Every kernel has a portable scalar reference and, on x86-64, an AVX2/FMA
// variant. The variant is chosen once at first use from CPUID; setting the
// environment variable HO_SIMD=scalar forces the reference path. Results of
// the two paths agree to rounding (FMA contraction and lane-wise reduction
// order differ) but each path is deterministic on its own.

#include <cstddef>
#include <span>
#include <string_view>

namespace ho::simd {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa);

struct AdamCoefficients {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias_correction1;  // 1 - beta1^t
  double bias_correction2;  // 1 - beta2^t
};

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // x *= alpha
  void (*scale)(double alpha, double* x, std::size_t n);
  // In-place bias-corrected Adam update of one parameter block.
  void (*adam)(double* params, const double* grads, double* m, double* v,
               std::size_t n, const AdamCoefficients& c);
};

const KernelTable& scalar_kernels();
#if defined(HO_HAVE_AVX2_KERNELS)
const KernelTable& avx2_kernels();
#endif

// True when the running CPU can execute the given table.
bool supported(Isa isa);

// The table selected for this process.
const KernelTable& kernels();

// Force a table (tests and benchmarks). Throws std::runtime_error when the
// CPU lacks the requested ISA.
void select(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return kernels().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  kernels().axpy(alpha, x.data(), y.data(), x.size());
}

inline void scale(double alpha, std::span<double> x) {
  kernels().scale(alpha, x.data(), x.size());
}

}  // namespace ho::simd
