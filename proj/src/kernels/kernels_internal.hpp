// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mosae/kernels.hpp"

#if defined(MOSAE_NO_SIMD)
#define MOSAE_KERNELS_X86 0
#elif defined(__x86_64__) || defined(_M_X64)
#define MOSAE_KERNELS_X86 1
#else
#define MOSAE_KERNELS_X86 0
#endif

#if !defined(MOSAE_NO_SIMD) && defined(__aarch64__) && defined(__ARM_NEON)
#define MOSAE_KERNELS_NEON 1
#else
#define MOSAE_KERNELS_NEON 0
#endif

namespace mosae::kernels {

#if MOSAE_KERNELS_X86
const KernelTable* avx2_table() noexcept;
#endif

#if MOSAE_KERNELS_NEON
const KernelTable* neon_table() noexcept;
#endif

}  // namespace mosae::kernels
