#include <cmath>

#include "rough/simd/kernels.hpp"
#include "split.hpp"

namespace rough::simd::scalar {
namespace {

double leaf_sum(const double* x, std::size_t n) noexcept {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc[0] += x[i];
    acc[1] += x[i + 1];
    acc[2] += x[i + 2];
    acc[3] += x[i + 3];
  }
  for (std::size_t lane = 0; i < n; ++i, ++lane) acc[lane] += x[i];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

double leaf_increment_dot(const double* a, const double* b, std::size_t n) noexcept {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (std::size_t lane = 0; lane < 4; ++lane) {
      const double term = a[i + lane] * (b[i + lane + 1] - b[i + lane]);
      acc[lane] += term;
    }
  }
  for (std::size_t lane = 0; i < n; ++i, ++lane) {
    const double term = a[i] * (b[i + 1] - b[i]);
    acc[lane] += term;
  }
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
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
  ArgMax best;
  best.value = -1.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = std::fabs(x[i] - base) * w[i];
    if (v > best.value) {
      best.value = v;
      best.index = i;
    }
  }
  if (best.value < 0.0) best = ArgMax{};
  return best;
}

void lower_tri_apply(std::span<const double> lower, std::size_t n, std::span<const double> in,
                     std::size_t fibers, std::span<double> out) noexcept {
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = lower.data() + i * n;
    double* dst = out.data() + i * fibers;
    for (std::size_t f = 0; f < fibers; ++f) {
      double acc = 0.0;
      for (std::size_t j = 0; j <= i; ++j) acc = std::fma(row[j], in[j * fibers + f], acc);
      dst[f] = acc;
    }
  }
}

}  // namespace rough::simd::scalar
