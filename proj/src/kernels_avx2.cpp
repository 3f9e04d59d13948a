// Compiled with -mavx2 only; callers reach it through the dispatch table
// after a runtime CPU check.
#include <immintrin.h>

#include "recon/simd.hpp"

namespace recon::simd::avx2 {

namespace {

double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

}  // namespace

void age_forward(const double* n, const double* g, const double* s, double* out, std::size_t K) {
  if (K < 3) return;
  const std::size_t last = K - 2;  // inclusive upper index
  const __m256d half = _mm256_set1_pd(0.5);
  std::size_t i = 1;
  for (; i + 3 <= last; i += 4) {
    const __m256d nv = _mm256_loadu_pd(n + i - 1);
    const __m256d gv = _mm256_loadu_pd(g + i - 1);
    const __m256d sv = _mm256_loadu_pd(s + i);
    const __m256d m = _mm256_mul_pd(_mm256_mul_pd(nv, gv), half);
    const __m256d r = _mm256_add_pd(_mm256_mul_pd(sv, _mm256_add_pd(nv, m)), m);
    _mm256_storeu_pd(out + i, r);
  }
  for (; i <= last; ++i) {
    const double m = (n[i - 1] * g[i - 1]) * 0.5;
    out[i] = s[i] * (n[i - 1] + m) + m;
  }
}

double births_exposure(const double* f, const double* n_cur, const double* n_prev, const double* s,
                       std::size_t len) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) {
    const __m256d term = _mm256_add_pd(
        _mm256_loadu_pd(n_cur + i), _mm256_mul_pd(_mm256_loadu_pd(n_prev + i), _mm256_loadu_pd(s + i)));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(f + i), term));
  }
  double total = hsum(acc);
  for (; i < len; ++i) total += f[i] * (n_cur[i] + n_prev[i] * s[i]);
  return total;
}

double sum_sq_diff(const double* a, const double* b, std::size_t len) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= len; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(d0, d0));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(d1, d1));
  }
  for (; i + 4 <= len; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(d, d));
  }
  double total = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < len; ++i) {
    const double d = a[i] - b[i];
    total += d * d;
  }
  return total;
}

std::size_t count_above(const double* v, std::size_t len, double t, bool inclusive) {
  const __m256d tv = _mm256_set1_pd(t);
  std::size_t count = 0;
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) {
    const __m256d x = _mm256_loadu_pd(v + i);
    const __m256d mask = inclusive ? _mm256_cmp_pd(x, tv, _CMP_GE_OQ) : _mm256_cmp_pd(x, tv, _CMP_GT_OQ);
    count += static_cast<std::size_t>(__builtin_popcount(_mm256_movemask_pd(mask)));
  }
  for (; i < len; ++i) count += inclusive ? v[i] >= t : v[i] > t;
  return count;
}

}  // namespace recon::simd::avx2
