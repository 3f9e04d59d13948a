#include <atomic>
#include <cstdlib>
#include <string>

#include "recon/simd.hpp"

namespace recon::simd {

namespace {

constexpr Kernels kScalar{&scalar::age_forward, &scalar::births_exposure, &scalar::sum_sq_diff,
                          &scalar::count_above};
#if defined(RECON_HAVE_AVX2)
constexpr Kernels kAvx2{&avx2::age_forward, &avx2::births_exposure, &avx2::sum_sq_diff,
                        &avx2::count_above};
#endif

Level initial_level() {
  if (const char* env = std::getenv("RECON_SIMD")) {
    if (auto requested = parse_level(env); requested && level_available(*requested)) return *requested;
  }
  return detected_level();
}

std::atomic<Level>& current() {
  static std::atomic<Level> level{initial_level()};
  return level;
}

}  // namespace

std::string_view level_name(Level level) {
  switch (level) {
    case Level::Scalar: return "scalar";
    case Level::Avx2: return "avx2";
  }
  return "scalar";
}

std::optional<Level> parse_level(std::string_view name) {
  if (name == "scalar") return Level::Scalar;
  if (name == "avx2") return Level::Avx2;
  return std::nullopt;
}

bool level_available(Level level) {
  switch (level) {
    case Level::Scalar: return true;
    case Level::Avx2:
#if defined(RECON_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

Level detected_level() { return level_available(Level::Avx2) ? Level::Avx2 : Level::Scalar; }

Level active_level() { return current().load(std::memory_order_relaxed); }

bool set_level(Level level) {
  if (!level_available(level)) return false;
  current().store(level, std::memory_order_relaxed);
  return true;
}

const Kernels& kernels_for(Level level) {
#if defined(RECON_HAVE_AVX2)
  if (level == Level::Avx2 && level_available(Level::Avx2)) return kAvx2;
#endif
  (void)level;
  return kScalar;
}

const Kernels& kernels() { return kernels_for(active_level()); }

}  // namespace recon::simd
