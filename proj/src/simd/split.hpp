#pragma once

#include <cstddef>

#include "rough/simd/kernels.hpp"

namespace rough::simd::detail {

// Split point shared by every variant so the reduction tree is identical.
inline std::size_t split_point(std::size_t n) noexcept {
  const std::size_t leaves = n / kLeaf;
  const std::size_t half = (leaves / 2) * kLeaf;
  return half == 0 ? kLeaf : half;
}

template <class Leaf>
double tree_reduce(const double* x, std::size_t n, Leaf leaf) noexcept {
  if (n <= kLeaf) return leaf(x, n);
  const std::size_t m = split_point(n);
  return tree_reduce(x, m, leaf) + tree_reduce(x + m, n - m, leaf);
}

template <class Leaf>
double tree_reduce2(const double* a, const double* b, std::size_t n, Leaf leaf) noexcept {
  if (n <= kLeaf) return leaf(a, b, n);
  const std::size_t m = split_point(n);
  return tree_reduce2(a, b, m, leaf) + tree_reduce2(a + m, b + m, n - m, leaf);
}

}  // namespace rough::simd::detail
