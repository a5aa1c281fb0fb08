#include <cstdlib>
#include <cstring>

#include "rlq/simd/mc_kernels.hpp"

namespace rlq::simd {

const char* to_string(Isa isa) noexcept { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool avx2_available() noexcept {
#if defined(RLQ_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa active_isa() noexcept {
  static const Isa isa = [] {
    const char* forced = std::getenv("RLQ_SIMD");
    if (forced != nullptr && std::strcmp(forced, "scalar") == 0) return Isa::Scalar;
    return avx2_available() ? Isa::Avx2 : Isa::Scalar;
  }();
  return isa;
}

void advance(double* log_x, double* log_z, const double* z1, const double* z2, std::size_t n, const CellStep& s) {
#ifdef RLQ_HAVE_AVX2
  if (active_isa() == Isa::Avx2) return avx2::advance(log_x, log_z, z1, z2, n, s);
#endif
  scalar::advance(log_x, log_z, z1, z2, n, s);
}

void accumulate(const double* x, const double* zeta, std::size_t n, MomentSums& sums) {
#ifdef RLQ_HAVE_AVX2
  if (active_isa() == Isa::Avx2) return avx2::accumulate(x, zeta, n, sums);
#endif
  scalar::accumulate(x, zeta, n, sums);
}

#ifndef RLQ_HAVE_AVX2
namespace avx2 {
void advance(double* log_x, double* log_z, const double* z1, const double* z2, std::size_t n, const CellStep& s) {
  scalar::advance(log_x, log_z, z1, z2, n, s);
}
void accumulate(const double* x, const double* zeta, std::size_t n, MomentSums& sums) {
  scalar::accumulate(x, zeta, n, sums);
}
}  // namespace avx2
#endif

}  // namespace rlq::simd
