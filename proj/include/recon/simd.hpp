#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

// Inner-loop kernels with a scalar reference implementation and vector
// variants chosen at runtime. Elementwise kernels round identically in every
// variant; reductions may differ from the scalar sum in the last bits
// because lanes are accumulated separately.
namespace recon::simd {

enum class Level { Scalar, Avx2 };

std::string_view level_name(Level level);
std::optional<Level> parse_level(std::string_view name);

// Best level supported by this CPU and build.
Level detected_level();
// Level used by kernels(). Defaults to detected_level(), overridable with the
// RECON_SIMD environment variable ("scalar" or "avx2") or set_level().
Level active_level();
// Returns false (and changes nothing) if the level is not available here.
bool set_level(Level level);
bool level_available(Level level);

struct Kernels {
  // Cohort advance for ages 5+ of one sex, excluding the open group:
  //   out[i] = s[i] * (n[i-1] + m) + m,  m = (n[i-1] * g[i-1]) * 0.5
  // for i = 1 .. K-2. n, g have K entries; s has K+1; out has K.
  void (*age_forward)(const double* n, const double* g, const double* s, double* out,
                      std::size_t K);
  // sum_i f[i] * (n_cur[i] + n_prev[i] * s[i])
  double (*births_exposure)(const double* f, const double* n_cur, const double* n_prev,
                            const double* s, std::size_t len);
  // sum_i (a[i] - b[i])^2
  double (*sum_sq_diff)(const double* a, const double* b, std::size_t len);
  // number of i with v[i] > t (or >= t when inclusive)
  std::size_t (*count_above)(const double* v, std::size_t len, double t, bool inclusive);
};

const Kernels& kernels();
const Kernels& kernels_for(Level level);

namespace scalar {
void age_forward(const double* n, const double* g, const double* s, double* out, std::size_t K);
double births_exposure(const double* f, const double* n_cur, const double* n_prev, const double* s,
                       std::size_t len);
double sum_sq_diff(const double* a, const double* b, std::size_t len);
std::size_t count_above(const double* v, std::size_t len, double t, bool inclusive);
}  // namespace scalar

#if defined(RECON_HAVE_AVX2)
namespace avx2 {
void age_forward(const double* n, const double* g, const double* s, double* out, std::size_t K);
double births_exposure(const double* f, const double* n_cur, const double* n_prev, const double* s,
                       std::size_t len);
double sum_sq_diff(const double* a, const double* b, std::size_t len);
std::size_t count_above(const double* v, std::size_t len, double t, bool inclusive);
}  // namespace avx2
#endif

// Span conveniences over the active kernel table.
inline double sum_sq_diff(std::span<const double> a, std::span<const double> b) {
  return kernels().sum_sq_diff(a.data(), b.data(), a.size());
}
inline std::size_t count_above(std::span<const double> v, double t, bool inclusive) {
  return kernels().count_above(v.data(), v.size(), t, inclusive);
}

}  // namespace recon::simd
