#include "fibra/kernels.hpp"

#include <atomic>

#include "fibra/error.hpp"

namespace fibra::kernels {

#if defined(FIBRA_BUILD_AVX2)
const Kernels& avx2_kernels_impl();
#endif

bool avx2_supported() {
#if defined(FIBRA_BUILD_AVX2) && (defined(__x86_64__) || defined(__i386__))
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

const Kernels& avx2_kernels() {
#if defined(FIBRA_BUILD_AVX2)
  if (avx2_supported()) return avx2_kernels_impl();
#endif
  throw ConfigError("avx2 kernels are not available on this machine");
}

namespace {

std::atomic<const Kernels*> g_active{nullptr};

const Kernels& pick_default() {
  if (avx2_supported()) return avx2_kernels();
  return scalar_kernels();
}

}  // namespace

const Kernels& active() {
  const Kernels* k = g_active.load(std::memory_order_acquire);
  if (!k) {
    k = &pick_default();
    g_active.store(k, std::memory_order_release);
  }
  return *k;
}

Isa active_isa() {
  return &active() == &scalar_kernels() ? Isa::scalar : Isa::avx2;
}

void select(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      g_active.store(&scalar_kernels(), std::memory_order_release);
      return;
    case Isa::avx2:
      g_active.store(&avx2_kernels(), std::memory_order_release);
      return;
  }
  throw ConfigError("unknown kernel isa");
}

Isa parse_isa(const std::string& name) {
  if (name == "auto") return avx2_supported() ? Isa::avx2 : Isa::scalar;
  if (name == "scalar") return Isa::scalar;
  if (name == "avx2") return Isa::avx2;
  throw ConfigError("unknown kernel isa '" + name +
                    "' (expected auto, scalar, or avx2)");
}

std::string isa_name(Isa isa) {
  return isa == Isa::scalar ? "scalar" : "avx2";
}

}  // namespace fibra::kernels
