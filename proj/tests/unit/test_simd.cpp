#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "ho/simd.hpp"

namespace {

using ho::simd::AdamCoefficients;
using ho::simd::KernelTable;

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

// Lengths that exercise the vector body, the remainder loop and both at once.
const std::size_t kLengths[] = {0, 1, 3, 4, 5, 7, 8, 15, 16, 17, 63, 64, 129, 1000};

double naive_dot(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
  return static_cast<double>(s);
}

void check_table_against_oracle(const KernelTable& k) {
  std::mt19937_64 rng(11);
  for (std::size_t n : kLengths) {
    CAPTURE(n);
    const auto a = random_vector(n, rng);
    const auto b = random_vector(n, rng);
    CHECK(k.dot(a.data(), b.data(), n) == doctest::Approx(naive_dot(a, b)).epsilon(1e-12));

    auto y = b;
    k.axpy(0.75, a.data(), y.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(y[i] == doctest::Approx(b[i] + 0.75 * a[i]).epsilon(1e-15));

    auto x = a;
    k.scale(-1.5, x.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(x[i] == -1.5 * a[i]);
  }
}

}  // namespace

TEST_CASE("scalar kernels match direct loops") { check_table_against_oracle(ho::simd::scalar_kernels()); }

TEST_CASE("scalar adam kernel matches the textbook update") {
  std::mt19937_64 rng(3);
  const std::size_t n = 37;
  auto p = random_vector(n, rng);
  const auto g = random_vector(n, rng);
  std::vector<double> m(n, 0.1), v(n, 0.2);
  const auto p0 = p;
  const auto m0 = m;
  const auto v0 = v;
  const AdamCoefficients c{1e-3, 0.9, 0.999, 1e-8, 1.0 - std::pow(0.9, 3), 1.0 - std::pow(0.999, 3)};
  ho::simd::scalar_kernels().adam(p.data(), g.data(), m.data(), v.data(), n, c);
  for (std::size_t i = 0; i < n; ++i) {
    const double mi = 0.9 * m0[i] + 0.1 * g[i];
    const double vi = 0.999 * v0[i] + 0.001 * g[i] * g[i];
    const double step = 1e-3 * (mi / c.bias_correction1) / (std::sqrt(vi / c.bias_correction2) + 1e-8);
    CHECK(m[i] == doctest::Approx(mi).epsilon(1e-15));
    CHECK(v[i] == doctest::Approx(vi).epsilon(1e-15));
    CHECK(p[i] == doctest::Approx(p0[i] - step).epsilon(1e-14));
  }
}

#if defined(HO_HAVE_AVX2_KERNELS)
TEST_CASE("avx2 kernels agree with the scalar reference") {
  if (!ho::simd::supported(ho::simd::Isa::Avx2)) {
    MESSAGE("CPU lacks AVX2; equivalence not exercised");
    return;
  }
  const auto& s = ho::simd::scalar_kernels();
  const auto& v = ho::simd::avx2_kernels();
  CHECK(v.isa == ho::simd::Isa::Avx2);
  check_table_against_oracle(v);

  std::mt19937_64 rng(5);
  for (std::size_t n : kLengths) {
    CAPTURE(n);
    const auto a = random_vector(n, rng);
    const auto b = random_vector(n, rng);
    CHECK(v.dot(a.data(), b.data(), n) == doctest::Approx(s.dot(a.data(), b.data(), n)).epsilon(1e-13));

    auto ys = b;
    auto yv = b;
    s.axpy(-0.3, a.data(), ys.data(), n);
    v.axpy(-0.3, a.data(), yv.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(yv[i] == doctest::Approx(ys[i]).epsilon(1e-15));

    auto ps = a, pv = a;
    std::vector<double> ms(n, 0.0), mv(n, 0.0), vs(n, 0.0), vv(n, 0.0);
    const AdamCoefficients c{5e-5, 0.9, 0.999, 1e-8, 0.1, 0.001};
    for (int step = 0; step < 3; ++step) {
      s.adam(ps.data(), b.data(), ms.data(), vs.data(), n, c);
      v.adam(pv.data(), b.data(), mv.data(), vv.data(), n, c);
    }
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(pv[i] == doctest::Approx(ps[i]).epsilon(1e-14));
      CHECK(mv[i] == doctest::Approx(ms[i]).epsilon(1e-14));
      CHECK(vv[i] == doctest::Approx(vs[i]).epsilon(1e-14));
    }
  }
}

TEST_CASE("runtime selection switches tables") {
  ho::simd::select(ho::simd::Isa::Scalar);
  CHECK(ho::simd::kernels().isa == ho::simd::Isa::Scalar);
  if (ho::simd::supported(ho::simd::Isa::Avx2)) {
    ho::simd::select(ho::simd::Isa::Avx2);
    CHECK(ho::simd::kernels().isa == ho::simd::Isa::Avx2);
  }
}
#endif

TEST_CASE("each path is deterministic") {
  std::mt19937_64 rng(9);
  const auto a = random_vector(301, rng);
  const auto b = random_vector(301, rng);
  const auto& k = ho::simd::kernels();
  const double first = k.dot(a.data(), b.data(), a.size());
  for (int i = 0; i < 5; ++i) CHECK(k.dot(a.data(), b.data(), a.size()) == first);
}
