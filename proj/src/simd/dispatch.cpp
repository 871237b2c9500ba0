#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "ho/simd.hpp"

namespace ho::simd {
namespace {

const KernelTable& table_for(Isa isa) {
#if defined(HO_HAVE_AVX2_KERNELS)
  if (isa == Isa::Avx2) return avx2_kernels();
#endif
  (void)isa;
  return scalar_kernels();
}

const KernelTable* detect() {
  if (const char* forced = std::getenv("HO_SIMD")) {
    const std::string want(forced);
    if (want == "scalar") return &scalar_kernels();
    if (want == "avx2" && supported(Isa::Avx2)) return &table_for(Isa::Avx2);
  }
  if (supported(Isa::Avx2)) return &table_for(Isa::Avx2);
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& active() {
  static std::atomic<const KernelTable*> table{detect()};
  return table;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

bool supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(HO_HAVE_AVX2_KERNELS)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& kernels() { return *active().load(std::memory_order_acquire); }

void select(Isa isa) {
  if (!supported(isa)) {
    throw std::runtime_error("simd: " + std::string(isa_name(isa)) + " not supported on this CPU");
  }
  active().store(&table_for(isa), std::memory_order_release);
}

}  // namespace ho::simd
