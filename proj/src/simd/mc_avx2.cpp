// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include "rlq/simd/mc_kernels.hpp"

namespace rlq::simd::avx2 {

void advance(double* log_x, double* log_z, const double* z1, const double* z2, std::size_t n, const CellStep& s) {
  const __m256d mx = _mm256_set1_pd(s.mx);
  const __m256d mz = _mm256_set1_pd(s.mz);
  const __m256d l11 = _mm256_set1_pd(s.l11);
  const __m256d l21 = _mm256_set1_pd(s.l21);
  const __m256d l22 = _mm256_set1_pd(s.l22);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_loadu_pd(z1 + i);
    const __m256d b = _mm256_loadu_pd(z2 + i);
    __m256d x = _mm256_loadu_pd(log_x + i);
    __m256d z = _mm256_loadu_pd(log_z + i);
    x = _mm256_add_pd(x, _mm256_fmadd_pd(l11, a, mx));
    z = _mm256_add_pd(z, _mm256_fmadd_pd(l22, b, _mm256_fmadd_pd(l21, a, mz)));
    _mm256_storeu_pd(log_x + i, x);
    _mm256_storeu_pd(log_z + i, z);
  }
  scalar::advance(log_x + i, log_z + i, z1 + i, z2 + i, n - i, s);
}

namespace {
double hsum(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}
}  // namespace

void accumulate(const double* x, const double* zeta, std::size_t n, MomentSums& sums) {
  __m256d s0 = _mm256_setzero_pd(), s1 = s0, s2 = s0, s3 = s0, s4 = s0, s5 = s0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    const __m256d zv = _mm256_loadu_pd(zeta + i);
    const __m256d zx = _mm256_mul_pd(zv, xv);
    const __m256d zx2 = _mm256_mul_pd(zx, xv);
    s0 = _mm256_add_pd(s0, zv);
    s1 = _mm256_fmadd_pd(zv, zv, s1);
    s2 = _mm256_add_pd(s2, zx);
    s3 = _mm256_fmadd_pd(zx, zx, s3);
    s4 = _mm256_add_pd(s4, zx2);
    s5 = _mm256_fmadd_pd(zx2, zx2, s5);
  }
  MomentSums tail{};
  scalar::accumulate(x + i, zeta + i, n - i, tail);
  const __m256d parts[6] = {s0, s1, s2, s3, s4, s5};
  for (int k = 0; k < 6; ++k) sums[k] += hsum(parts[k]) + tail[k];
}

}  // namespace rlq::simd::avx2
