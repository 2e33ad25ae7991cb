// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <cstdlib>
#include <string_view>

#include "kernels_internal.hpp"

namespace mosae::kernels {
namespace {

std::atomic<const KernelTable*> g_active{nullptr};

#if MOSAE_KERNELS_X86
bool cpu_has_avx2() noexcept {
#if defined(__GNUC__) || defined(__clang__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}
#endif

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

const KernelTable* table_for(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return &scalar_table();
    case Isa::avx2:
#if MOSAE_KERNELS_X86
      return cpu_has_avx2() ? avx2_table() : nullptr;
#else
      return nullptr;
#endif
    case Isa::neon:
#if MOSAE_KERNELS_NEON
      return neon_table();
#else
      return nullptr;
#endif
  }
  return nullptr;
}

Isa detect_isa() noexcept {
  if (const char* env = std::getenv("MOSAE_ISA"); env && std::string_view(env) == "scalar") {
    return Isa::scalar;
  }
  if (table_for(Isa::avx2)) return Isa::avx2;
  if (table_for(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

const KernelTable& active() noexcept {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (!t) {
    t = table_for(detect_isa());
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

bool force_isa(Isa isa) noexcept {
  const KernelTable* t = table_for(isa);
  if (!t) return false;
  g_active.store(t, std::memory_order_release);
  return true;
}

}  // namespace mosae::kernels
