#include "recon/simd.hpp"

namespace recon::simd::scalar {

void age_forward(const double* n, const double* g, const double* s, double* out, std::size_t K) {
  for (std::size_t i = 1; i + 1 < K; ++i) {
    const double m = (n[i - 1] * g[i - 1]) * 0.5;
    out[i] = s[i] * (n[i - 1] + m) + m;
  }
}

double births_exposure(const double* f, const double* n_cur, const double* n_prev, const double* s,
                       std::size_t len) {
  double acc = 0.0;
  for (std::size_t i = 0; i < len; ++i) acc += f[i] * (n_cur[i] + n_prev[i] * s[i]);
  return acc;
}

double sum_sq_diff(const double* a, const double* b, std::size_t len) {
  double acc = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

std::size_t count_above(const double* v, std::size_t len, double t, bool inclusive) {
  std::size_t count = 0;
  if (inclusive) {
    for (std::size_t i = 0; i < len; ++i) count += v[i] >= t;
  } else {
    for (std::size_t i = 0; i < len; ++i) count += v[i] > t;
  }
  return count;
}

}  // namespace recon::simd::scalar
