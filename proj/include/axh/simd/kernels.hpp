#pragma once

// Dense inner-loop kernels with a portable scalar reference and an AVX2/FMA
// variant picked once at startup. Everything above this layer (conv2d, affine,
// batchnorm, the optimizer) goes through `kernels<T>()`.

#include <cstddef>
#include <string_view>

namespace axh::simd {

enum class Isa { Scalar, Avx2 };

enum class Trans { No, Yes };

/// Row-major C[m x n] = alpha * op(A) * op(B) + beta * C.
/// op(A) is m x k, op(B) is k x n. lda/ldb/ldc are row strides of the stored
/// matrices (so a transposed A is stored k x m with stride lda >= m).
template <class T>
using GemmFn = void (*)(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, T alpha,
                        const T* a, std::size_t lda, const T* b, std::size_t ldb, T beta, T* c,
                        std::size_t ldc);

/// y += alpha * x
template <class T>
using AxpyFn = void (*)(std::size_t n, T alpha, const T* x, T* y);

template <class T>
using DotFn = T (*)(std::size_t n, const T* x, const T* y);

template <class T>
struct KernelTable {
  Isa isa;
  GemmFn<T> gemm;
  AxpyFn<T> axpy;
  DotFn<T> dot;
};

// Per-ISA tables; the AVX2 ones exist only when compiled with AXH_HAVE_AVX2.
namespace scalar {
template <class T>
const KernelTable<T>& table();
}
#if defined(AXH_HAVE_AVX2)
namespace avx2 {
template <class T>
const KernelTable<T>& table();
}
#endif

/// True when the running CPU supports AVX2 and FMA and the variant was built.
bool avx2_available();

/// The ISA currently selected. Starts as the best available one unless the
/// environment variable AXH_FORCE_SCALAR is set to a non-empty value other than "0".
Isa active_isa();

/// Overrides the selection (falls back to Scalar when the request is unavailable).
void set_active_isa(Isa isa);

std::string_view isa_name(Isa isa);

template <class T>
const KernelTable<T>& kernels();

}  // namespace axh::simd
