#pragma once

// Inner loops of the Monte Carlo cross-check. Each kernel has a scalar
// reference and an AVX2 variant; the dispatching entry points pick one at
// first use from the CPU and the RLQ_SIMD environment variable ("scalar"
// forces the reference path).

#include <array>
#include <cstddef>

namespace rlq::simd {

/// One exact log-space transition of (log X, log zeta) over a cell:
///   log X    += mx + l11 z1
///   log zeta += mz + l21 z1 + l22 z2
struct CellStep {
  double mx = 0.0;
  double mz = 0.0;
  double l11 = 0.0;
  double l21 = 0.0;
  double l22 = 0.0;
};

/// Sums of zeta, zeta^2, zeta x, (zeta x)^2, zeta x^2, (zeta x^2)^2.
using MomentSums = std::array<double, 6>;

enum class Isa { Scalar, Avx2 };
const char* to_string(Isa isa) noexcept;

namespace scalar {
void advance(double* log_x, double* log_z, const double* z1, const double* z2, std::size_t n, const CellStep& s);
void accumulate(const double* x, const double* zeta, std::size_t n, MomentSums& sums);
}  // namespace scalar

namespace avx2 {
void advance(double* log_x, double* log_z, const double* z1, const double* z2, std::size_t n, const CellStep& s);
void accumulate(const double* x, const double* zeta, std::size_t n, MomentSums& sums);
}  // namespace avx2

/// True when the CPU supports AVX2 and FMA.
bool avx2_available() noexcept;

/// The variant used by advance/accumulate below.
Isa active_isa() noexcept;

void advance(double* log_x, double* log_z, const double* z1, const double* z2, std::size_t n, const CellStep& s);
void accumulate(const double* x, const double* zeta, std::size_t n, MomentSums& sums);

}  // namespace rlq::simd
