#include <atomic>
#include <cstdlib>
#include <string>

#include "ips/simd/kernels.hpp"

namespace ips::simd {

#if defined(IPS_HAVE_AVX2_KERNELS)
const KernelTable& avx2_table();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(IPS_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* table_for(Isa isa) {
  if (isa == Isa::Avx2) return avx2_kernels();
  return &scalar_kernels();
}

const KernelTable* initial_table() {
  if (const char* env = std::getenv("IPS_SIMD"); env != nullptr && std::string(env) == "scalar")
    return &scalar_kernels();
  return table_for(detect_best());
}

std::atomic<const KernelTable*>& active() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const KernelTable* avx2_kernels() {
#if defined(IPS_HAVE_AVX2_KERNELS)
  static const bool supported = cpu_has_avx2();
  return supported ? &avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

Isa detect_best() { return avx2_kernels() != nullptr ? Isa::Avx2 : Isa::Scalar; }

const KernelTable& kernels() { return *active().load(std::memory_order_acquire); }

void select(Isa isa) {
  const KernelTable* t = table_for(isa);
  if (t == nullptr) t = &scalar_kernels();
  active().store(t, std::memory_order_release);
}

std::string_view name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

}  // namespace ips::simd
