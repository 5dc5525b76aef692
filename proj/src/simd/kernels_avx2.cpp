// Compiled with -mavx2 -mfma; only reached after a runtime feature check.
#include <immintrin.h>

#include <cmath>

#include "rough/simd/kernels.hpp"
#include "split.hpp"

namespace rough::simd::avx2 {
namespace {

inline double fold_lanes(__m256d acc, const double* tail, std::size_t rem) noexcept {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  for (std::size_t lane = 0; lane < rem; ++lane) lanes[lane] += tail[lane];
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

double leaf_sum(const double* x, std::size_t n) noexcept {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  return fold_lanes(acc, x + i, n - i);
}

double leaf_increment_dot(const double* a, const double* b, std::size_t n) noexcept {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d db = _mm256_sub_pd(_mm256_loadu_pd(b + i + 1), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), db));
  }
  double tail[4];
  const std::size_t rem = n - i;
  for (std::size_t lane = 0; lane < rem; ++lane) {
    tail[lane] = a[i + lane] * (b[i + lane + 1] - b[i + lane]);
  }
  return fold_lanes(acc, tail, rem);
}

}  // namespace

double pairwise_sum(std::span<const double> x) noexcept {
  return detail::tree_reduce(x.data(), x.size(), leaf_sum);
}

double increment_dot(std::span<const double> a, std::span<const double> b) noexcept {
  return detail::tree_reduce2(a.data(), b.data(), a.size(), leaf_increment_dot);
}

ArgMax max_abs_diff_weighted(std::span<const double> x, double base,
                             std::span<const double> w) noexcept {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const __m256d vbase = _mm256_set1_pd(base);
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d vmax = _mm256_set1_pd(-1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_andnot_pd(sign, _mm256_sub_pd(_mm256_loadu_pd(x.data() + i), vbase));
    vmax = _mm256_max_pd(vmax, _mm256_mul_pd(d, _mm256_loadu_pd(w.data() + i)));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, vmax);
  double best = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
  for (; i < n; ++i) best = std::max(best, std::fabs(x[i] - base) * w[i]);
  // Second pass recovers the first index attaining the maximum.
  for (std::size_t j = 0; j < n; ++j) {
    if (std::fabs(x[j] - base) * w[j] == best) return {best, j};
  }
  return {best, 0};
}

void lower_tri_apply(std::span<const double> lower, std::size_t n, std::span<const double> in,
                     std::size_t fibers, std::span<double> out) noexcept {
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = lower.data() + i * n;
    double* dst = out.data() + i * fibers;
    std::size_t f = 0;
    for (; f + 4 <= fibers; f += 4) {
      __m256d acc = _mm256_setzero_pd();
      for (std::size_t j = 0; j <= i; ++j) {
        acc = _mm256_fmadd_pd(_mm256_set1_pd(row[j]), _mm256_loadu_pd(in.data() + j * fibers + f),
                              acc);
      }
      _mm256_storeu_pd(dst + f, acc);
    }
    for (; f < fibers; ++f) {
      double acc = 0.0;
      for (std::size_t j = 0; j <= i; ++j) acc = std::fma(row[j], in[j * fibers + f], acc);
      dst[f] = acc;
    }
  }
}

}  // namespace rough::simd::avx2
