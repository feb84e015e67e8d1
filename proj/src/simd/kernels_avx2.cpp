// AVX2 + FMA kernels. This translation unit is compiled with -mavx2 -mfma and
// must only be entered after avx2_available() returned true.

#include <immintrin.h>

#include <algorithm>
#include <cstring>
#include <vector>

#include "axh/simd/kernels.hpp"

namespace axh::simd::avx2 {
namespace {

template <class T>
struct Vec;

template <>
struct Vec<float> {
  using type = __m256;
  static constexpr std::size_t width = 8;
  static type zero() { return _mm256_setzero_ps(); }
  static type load(const float* p) { return _mm256_loadu_ps(p); }
  static void store(float* p, type v) { _mm256_storeu_ps(p, v); }
  static type set1(float x) { return _mm256_set1_ps(x); }
  static type fmadd(type a, type b, type c) { return _mm256_fmadd_ps(a, b, c); }
  static type mul(type a, type b) { return _mm256_mul_ps(a, b); }
  static float hsum(type v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    lo = _mm_hadd_ps(lo, lo);
    lo = _mm_hadd_ps(lo, lo);
    return _mm_cvtss_f32(lo);
  }
};

template <>
struct Vec<double> {
  using type = __m256d;
  static constexpr std::size_t width = 4;
  static type zero() { return _mm256_setzero_pd(); }
  static type load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, type v) { _mm256_storeu_pd(p, v); }
  static type set1(double x) { return _mm256_set1_pd(x); }
  static type fmadd(type a, type b, type c) { return _mm256_fmadd_pd(a, b, c); }
  static type mul(type a, type b) { return _mm256_mul_pd(a, b); }
  static double hsum(type v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    lo = _mm_hadd_pd(lo, lo);
    return _mm_cvtsd_f64(lo);
  }
};

// Register tile: MR rows x (2 vectors) columns.
constexpr std::size_t kMR = 6;
constexpr std::size_t kKC = 256;
constexpr std::size_t kMC = 96;
constexpr std::size_t kNC = 2048;

template <class T>
constexpr std::size_t kNR = 2 * Vec<T>::width;

template <class T>
T elem(const T* p, std::size_t ld, Trans t, std::size_t row, std::size_t col) {
  return t == Trans::No ? p[row * ld + col] : p[col * ld + row];
}

// Packs op(A)[i0:i0+mc, p0:p0+kc] as consecutive MR-row panels, k-major inside a panel.
template <class T>
void pack_a(Trans ta, const T* a, std::size_t lda, std::size_t i0, std::size_t mc, std::size_t p0,
            std::size_t kc, T* dst) {
  for (std::size_t ir = 0; ir < mc; ir += kMR) {
    const std::size_t rows = std::min(kMR, mc - ir);
    for (std::size_t p = 0; p < kc; ++p) {
      std::size_t r = 0;
      for (; r < rows; ++r) dst[r] = elem(a, lda, ta, i0 + ir + r, p0 + p);
      for (; r < kMR; ++r) dst[r] = T(0);
      dst += kMR;
    }
  }
}

// Packs op(B)[p0:p0+kc, j0:j0+nc] as consecutive NR-column panels, k-major inside a panel.
template <class T>
void pack_b(Trans tb, const T* b, std::size_t ldb, std::size_t p0, std::size_t kc, std::size_t j0,
            std::size_t nc, T* dst) {
  constexpr std::size_t nr = kNR<T>;
  for (std::size_t jr = 0; jr < nc; jr += nr) {
    const std::size_t cols = std::min(nr, nc - jr);
    for (std::size_t p = 0; p < kc; ++p) {
      if (tb == Trans::No && cols == nr) {
        std::memcpy(dst, b + (p0 + p) * ldb + j0 + jr, nr * sizeof(T));
      } else {
        std::size_t c = 0;
        for (; c < cols; ++c) dst[c] = elem(b, ldb, tb, p0 + p, j0 + jr + c);
        for (; c < nr; ++c) dst[c] = T(0);
      }
      dst += nr;
    }
  }
}

// acc[MR][NR] = sum_p ap[p][r] * bp[p][c]; then C = alpha*acc + beta*C on the valid rows/cols.
template <class T>
void micro_kernel(std::size_t kc, const T* ap, const T* bp, T alpha, T beta, T* c, std::size_t ldc,
                  std::size_t rows, std::size_t cols) {
  using V = Vec<T>;
  using R = typename V::type;
  constexpr std::size_t w = V::width;
  constexpr std::size_t nr = kNR<T>;
  R c00 = V::zero(), c01 = V::zero(), c10 = V::zero(), c11 = V::zero();
  R c20 = V::zero(), c21 = V::zero(), c30 = V::zero(), c31 = V::zero();
  R c40 = V::zero(), c41 = V::zero(), c50 = V::zero(), c51 = V::zero();
  for (std::size_t p = 0; p < kc; ++p) {
    const R b0 = V::load(bp);
    const R b1 = V::load(bp + w);
    R a = V::set1(ap[0]);
    c00 = V::fmadd(a, b0, c00);
    c01 = V::fmadd(a, b1, c01);
    a = V::set1(ap[1]);
    c10 = V::fmadd(a, b0, c10);
    c11 = V::fmadd(a, b1, c11);
    a = V::set1(ap[2]);
    c20 = V::fmadd(a, b0, c20);
    c21 = V::fmadd(a, b1, c21);
    a = V::set1(ap[3]);
    c30 = V::fmadd(a, b0, c30);
    c31 = V::fmadd(a, b1, c31);
    a = V::set1(ap[4]);
    c40 = V::fmadd(a, b0, c40);
    c41 = V::fmadd(a, b1, c41);
    a = V::set1(ap[5]);
    c50 = V::fmadd(a, b0, c50);
    c51 = V::fmadd(a, b1, c51);
    ap += kMR;
    bp += nr;
  }
  alignas(32) T tile[kMR * nr];
  const R va = V::set1(alpha);
  V::store(tile + 0 * nr, V::mul(c00, va));
  V::store(tile + 0 * nr + w, V::mul(c01, va));
  V::store(tile + 1 * nr, V::mul(c10, va));
  V::store(tile + 1 * nr + w, V::mul(c11, va));
  V::store(tile + 2 * nr, V::mul(c20, va));
  V::store(tile + 2 * nr + w, V::mul(c21, va));
  V::store(tile + 3 * nr, V::mul(c30, va));
  V::store(tile + 3 * nr + w, V::mul(c31, va));
  V::store(tile + 4 * nr, V::mul(c40, va));
  V::store(tile + 4 * nr + w, V::mul(c41, va));
  V::store(tile + 5 * nr, V::mul(c50, va));
  V::store(tile + 5 * nr + w, V::mul(c51, va));
  for (std::size_t r = 0; r < rows; ++r) {
    T* crow = c + r * ldc;
    const T* trow = tile + r * nr;
    if (beta == T(0)) {
      for (std::size_t j = 0; j < cols; ++j) crow[j] = trow[j];
    } else if (beta == T(1)) {
      for (std::size_t j = 0; j < cols; ++j) crow[j] += trow[j];
    } else {
      for (std::size_t j = 0; j < cols; ++j) crow[j] = beta * crow[j] + trow[j];
    }
  }
}

template <class T>
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, T alpha, const T* a,
          std::size_t lda, const T* b, std::size_t ldb, T beta, T* c, std::size_t ldc) {
  if (m == 0 || n == 0) return;
  if (k == 0) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) c[i * ldc + j] = beta == T(0) ? T(0) : beta * c[i * ldc + j];
    return;
  }
  constexpr std::size_t nr = kNR<T>;
  thread_local std::vector<T> abuf;
  thread_local std::vector<T> bbuf;
  abuf.resize(kMC * kKC);
  bbuf.resize((kNC + nr) * kKC);
  for (std::size_t jc = 0; jc < n; jc += kNC) {
    const std::size_t nc = std::min(kNC, n - jc);
    for (std::size_t pc = 0; pc < k; pc += kKC) {
      const std::size_t kc = std::min(kKC, k - pc);
      const T beta_eff = pc == 0 ? beta : T(1);
      pack_b(tb, b, ldb, pc, kc, jc, nc, bbuf.data());
      for (std::size_t ic = 0; ic < m; ic += kMC) {
        const std::size_t mc = std::min(kMC, m - ic);
        pack_a(ta, a, lda, ic, mc, pc, kc, abuf.data());
        for (std::size_t jr = 0; jr < nc; jr += nr) {
          const T* bp = bbuf.data() + (jr / nr) * nr * kc;
          const std::size_t cols = std::min(nr, nc - jr);
          for (std::size_t ir = 0; ir < mc; ir += kMR) {
            const T* ap = abuf.data() + (ir / kMR) * kMR * kc;
            const std::size_t rows = std::min(kMR, mc - ir);
            micro_kernel(kc, ap, bp, alpha, beta_eff, c + (ic + ir) * ldc + jc + jr, ldc, rows, cols);
          }
        }
      }
    }
  }
}

template <class T>
void axpy(std::size_t n, T alpha, const T* x, T* y) {
  using V = Vec<T>;
  constexpr std::size_t w = V::width;
  const auto va = V::set1(alpha);
  std::size_t i = 0;
  for (; i + w <= n; i += w) V::store(y + i, V::fmadd(va, V::load(x + i), V::load(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

template <class T>
T dot(std::size_t n, const T* x, const T* y) {
  using V = Vec<T>;
  constexpr std::size_t w = V::width;
  auto s0 = V::zero();
  auto s1 = V::zero();
  std::size_t i = 0;
  for (; i + 2 * w <= n; i += 2 * w) {
    s0 = V::fmadd(V::load(x + i), V::load(y + i), s0);
    s1 = V::fmadd(V::load(x + i + w), V::load(y + i + w), s1);
  }
  for (; i + w <= n; i += w) s0 = V::fmadd(V::load(x + i), V::load(y + i), s0);
  T s = V::hsum(s0) + V::hsum(s1);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

}  // namespace

template <class T>
const KernelTable<T>& table() {
  static const KernelTable<T> t{Isa::Avx2, &gemm<T>, &axpy<T>, &dot<T>};
  return t;
}

template const KernelTable<float>& table<float>();
template const KernelTable<double>& table<double>();

}  // namespace axh::simd::avx2
