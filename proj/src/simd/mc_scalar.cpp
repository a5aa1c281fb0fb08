#include "rlq/simd/mc_kernels.hpp"

namespace rlq::simd::scalar {

void advance(double* log_x, double* log_z, const double* z1, const double* z2, std::size_t n, const CellStep& s) {
  for (std::size_t i = 0; i < n; ++i) {
    log_x[i] += s.mx + s.l11 * z1[i];
    log_z[i] += s.mz + s.l21 * z1[i] + s.l22 * z2[i];
  }
}

void accumulate(const double* x, const double* zeta, std::size_t n, MomentSums& sums) {
  for (std::size_t i = 0; i < n; ++i) {
    const double zx = zeta[i] * x[i];
    const double zx2 = zx * x[i];
    sums[0] += zeta[i];
    sums[1] += zeta[i] * zeta[i];
    sums[2] += zx;
    sums[3] += zx * zx;
    sums[4] += zx2;
    sums[5] += zx2 * zx2;
  }
}

}  // namespace rlq::simd::scalar
