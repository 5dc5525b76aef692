#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Data-parallel inner loops used across the library. Each kernel has a
// scalar reference implementation and an AVX2 variant; the variant is picked
// once at startup from the CPU feature set. The variants evaluate exactly the
// same floating-point expression tree as the reference, so results are
// bit-identical whichever one runs (tests/unit/simd_kernels_test.cpp).

namespace rough::simd {

enum class Isa { scalar, avx2 };

/// Instruction set selected for this process.
Isa active_isa() noexcept;
std::string_view isa_name(Isa isa) noexcept;

/// Forces a variant (tests and benchmarks). Requesting an unsupported ISA
/// falls back to scalar; returns the ISA actually installed.
Isa force_isa(Isa isa) noexcept;
bool isa_supported(Isa isa) noexcept;

/// Fixed-tree pairwise sum. Leaves of up to kLeaf elements are folded into
/// four interleaved accumulators, combined as (a0+a1)+(a2+a3); larger inputs
/// split at a multiple of kLeaf and recurse.
inline constexpr std::size_t kLeaf = 64;
double pairwise_sum(std::span<const double> x) noexcept;

/// Pairwise sum of a[i] * (b[i+1] - b[i]) for i < a.size(); b must hold
/// a.size() + 1 entries. Same tree as pairwise_sum.
double increment_dot(std::span<const double> a, std::span<const double> b) noexcept;

struct ArgMax {
  double value = 0.0;
  std::size_t index = 0;
};

/// max_i |x[i] - base| * w[i] with the first maximising index. Empty input
/// yields {0, 0}.
ArgMax max_abs_diff_weighted(std::span<const double> x, double base,
                             std::span<const double> w) noexcept;

/// Applies a lower-triangular n x n row-major matrix L along the leading axis
/// of a (n x fibers) row-major block: out[i][f] = sum_{j<=i} L[i][j] in[j][f],
/// accumulated in j order with fused multiply-add.
void lower_tri_apply(std::span<const double> lower, std::size_t n, std::span<const double> in,
                     std::size_t fibers, std::span<double> out) noexcept;

namespace scalar {
double pairwise_sum(std::span<const double> x) noexcept;
double increment_dot(std::span<const double> a, std::span<const double> b) noexcept;
ArgMax max_abs_diff_weighted(std::span<const double> x, double base,
                             std::span<const double> w) noexcept;
void lower_tri_apply(std::span<const double> lower, std::size_t n, std::span<const double> in,
                     std::size_t fibers, std::span<double> out) noexcept;
}  // namespace scalar

namespace avx2 {
double pairwise_sum(std::span<const double> x) noexcept;
double increment_dot(std::span<const double> a, std::span<const double> b) noexcept;
ArgMax max_abs_diff_weighted(std::span<const double> x, double base,
                             std::span<const double> w) noexcept;
void lower_tri_apply(std::span<const double> lower, std::size_t n, std::span<const double> in,
                     std::size_t fibers, std::span<double> out) noexcept;
}  // namespace avx2

}  // namespace rough::simd
