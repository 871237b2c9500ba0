#include "ho/simd.hpp"

#include <cmath>

namespace ho::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void adam_scalar(double* params, const double* grads, double* m, double* v,
                 std::size_t n, const AdamCoefficients& c) {
  const double step = c.lr / c.bias_correction1;
  const double inv_sqrt_bc2 = 1.0 / std::sqrt(c.bias_correction2);
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * grads[i];
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * grads[i] * grads[i];
    const double denom = std::sqrt(v[i]) * inv_sqrt_bc2 + c.eps;
    params[i] -= step * m[i] / denom;
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Isa::Scalar, &dot_scalar, &axpy_scalar, &scale_scalar,
                                 &adam_scalar};
  return table;
}

}  // namespace ho::simd
