#include <atomic>

#include "rough/simd/kernels.hpp"

namespace rough::simd {
namespace {

struct Table {
  double (*pairwise_sum)(std::span<const double>) noexcept;
  double (*increment_dot)(std::span<const double>, std::span<const double>) noexcept;
  ArgMax (*max_abs_diff_weighted)(std::span<const double>, double,
                                  std::span<const double>) noexcept;
  void (*lower_tri_apply)(std::span<const double>, std::size_t, std::span<const double>,
                          std::size_t, std::span<double>) noexcept;
};

constexpr Table kScalar{scalar::pairwise_sum, scalar::increment_dot,
                        scalar::max_abs_diff_weighted, scalar::lower_tri_apply};
constexpr Table kAvx2{avx2::pairwise_sum, avx2::increment_dot, avx2::max_abs_diff_weighted,
                      avx2::lower_tri_apply};

bool cpu_has_avx2() noexcept {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa detect() noexcept { return cpu_has_avx2() ? Isa::avx2 : Isa::scalar; }

std::atomic<Isa>& current() noexcept {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

const Table& table() noexcept {
  return current().load(std::memory_order_relaxed) == Isa::avx2 ? kAvx2 : kScalar;
}

}  // namespace

Isa active_isa() noexcept { return current().load(std::memory_order_relaxed); }

std::string_view isa_name(Isa isa) noexcept { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool isa_supported(Isa isa) noexcept { return isa == Isa::scalar || cpu_has_avx2(); }

Isa force_isa(Isa isa) noexcept {
  const Isa chosen = isa_supported(isa) ? isa : Isa::scalar;
  current().store(chosen, std::memory_order_relaxed);
  return chosen;
}

double pairwise_sum(std::span<const double> x) noexcept { return table().pairwise_sum(x); }

double increment_dot(std::span<const double> a, std::span<const double> b) noexcept {
  return table().increment_dot(a, b);
}

ArgMax max_abs_diff_weighted(std::span<const double> x, double base,
                             std::span<const double> w) noexcept {
  return table().max_abs_diff_weighted(x, base, w);
}

void lower_tri_apply(std::span<const double> lower, std::size_t n, std::span<const double> in,
                     std::size_t fibers, std::span<double> out) noexcept {
  table().lower_tri_apply(lower, n, in, fibers, out);
}

}  // namespace rough::simd
