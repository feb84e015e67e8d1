#include <atomic>
#include <cstdlib>
#include <string>

#include "axh/simd/kernels.hpp"

namespace axh::simd {
namespace {

bool env_forces_scalar() {
  const char* v = std::getenv("AXH_FORCE_SCALAR");
  return v != nullptr && *v != '\0' && std::string(v) != "0";
}

Isa initial_isa() {
  if (env_forces_scalar()) return Isa::Scalar;
  return avx2_available() ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<Isa>& selected() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

bool avx2_available() {
#if defined(AXH_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok;
#else
  return false;
#endif
}

Isa active_isa() { return selected().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (isa == Isa::Avx2 && !avx2_available()) isa = Isa::Scalar;
  selected().store(isa, std::memory_order_relaxed);
}

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

template <class T>
const KernelTable<T>& kernels() {
#if defined(AXH_HAVE_AVX2)
  if (active_isa() == Isa::Avx2) return avx2::table<T>();
#endif
  return scalar::table<T>();
}

template const KernelTable<float>& kernels<float>();
template const KernelTable<double>& kernels<double>();

}  // namespace axh::simd
