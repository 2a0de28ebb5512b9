#include "fibra/kernels.hpp"

#if defined(__AVX2__)

#include <immintrin.h>

namespace fibra::kernels {

namespace {

// No FMA intrinsics here: lanewise mul+add matches the scalar path
// rounding for rounding.

void axpy_avx2(std::size_t n, double a, const double* x, double* y) {
  const __m256d va = _mm256_set1_pd(a);
  const std::size_t nb = n / 4 * 4;
  for (std::size_t i = 0; i < nb; i += 4) {
    const __m256d vx = _mm256_loadu_pd(x + i);
    const __m256d vy = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(va, vx)));
  }
  for (std::size_t i = nb; i < n; ++i) y[i] += a * x[i];
}

void accel_avx2(std::size_t n, const double* f, const double* m,
                const double* inv_m, double c, const double* v, double* fd,
                double* acc) {
  const __m256d vc = _mm256_set1_pd(c);
  const __m256d neg = _mm256_set1_pd(-0.0);
  const std::size_t nb = n / 4 * 4;
  for (std::size_t i = 0; i < nb; i += 4) {
    const __m256d vm = _mm256_loadu_pd(m + i);
    const __m256d vv = _mm256_loadu_pd(v + i);
    const __m256d vf = _mm256_loadu_pd(f + i);
    const __m256d vi = _mm256_loadu_pd(inv_m + i);
    const __m256d d = _mm256_mul_pd(_mm256_mul_pd(vc, vm), vv);
    _mm256_storeu_pd(fd + i, d);
    const __m256d s = _mm256_mul_pd(_mm256_add_pd(vf, d), vi);
    _mm256_storeu_pd(acc + i, _mm256_xor_pd(s, neg));
  }
  for (std::size_t i = nb; i < n; ++i) {
    const double d = c * m[i] * v[i];
    fd[i] = d;
    acc[i] = -(f[i] + d) * inv_m[i];
  }
}

double norm2_sq_avx2(std::size_t n, const double* x) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t nb = n / 4 * 4;
  for (std::size_t i = 0; i < nb; i += 4) {
    const __m256d vx = _mm256_loadu_pd(x + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(vx, vx));
  }
  alignas(32) double s[4];
  _mm256_store_pd(s, acc);
  for (std::size_t i = nb; i < n; ++i) s[i - nb] += x[i] * x[i];
  return (s[0] + s[1]) + (s[2] + s[3]);
}

double weighted_sq_avx2(std::size_t n, const double* w, const double* x) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t nb = n / 4 * 4;
  for (std::size_t i = 0; i < nb; i += 4) {
    const __m256d vx = _mm256_loadu_pd(x + i);
    const __m256d vw = _mm256_loadu_pd(w + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(vw, _mm256_mul_pd(vx, vx)));
  }
  alignas(32) double s[4];
  _mm256_store_pd(s, acc);
  for (std::size_t i = nb; i < n; ++i) s[i - nb] += w[i] * (x[i] * x[i]);
  return (s[0] + s[1]) + (s[2] + s[3]);
}

double dot_avx2(std::size_t n, const double* x, const double* y) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t nb = n / 4 * 4;
  for (std::size_t i = 0; i < nb; i += 4) {
    const __m256d vx = _mm256_loadu_pd(x + i);
    const __m256d vy = _mm256_loadu_pd(y + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(vx, vy));
  }
  alignas(32) double s[4];
  _mm256_store_pd(s, acc);
  for (std::size_t i = nb; i < n; ++i) s[i - nb] += x[i] * y[i];
  return (s[0] + s[1]) + (s[2] + s[3]);
}

void fill_avx2(std::size_t n, double value, double* x) {
  const __m256d v = _mm256_set1_pd(value);
  const std::size_t nb = n / 4 * 4;
  for (std::size_t i = 0; i < nb; i += 4) _mm256_storeu_pd(x + i, v);
  for (std::size_t i = nb; i < n; ++i) x[i] = value;
}

}  // namespace

const Kernels& avx2_kernels_impl() {
  static const Kernels k{axpy_avx2, accel_avx2,  norm2_sq_avx2,
                         weighted_sq_avx2, dot_avx2, fill_avx2,
                         "avx2"};
  return k;
}

}  // namespace fibra::kernels

#endif  // __AVX2__
