#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "rough/simd/kernels.hpp"

using namespace rough;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng) * std::exp(8.0 * u(rng));
  return v;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

const std::vector<std::size_t> kSizes{0, 1, 2, 3, 4, 5, 7, 8, 15, 16, 17, 63, 64, 65, 127, 128, 129, 200, 1000, 4097};

}  // namespace

class SimdEquivalence : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!simd::isa_supported(simd::Isa::avx2)) GTEST_SKIP() << "AVX2 not available";
  }
};

TEST_F(SimdEquivalence, PairwiseSumBitIdentical) {
  std::mt19937_64 rng(1);
  for (std::size_t n : kSizes) {
    const auto x = random_vector(n, rng);
    EXPECT_TRUE(same_bits(simd::scalar::pairwise_sum(x), simd::avx2::pairwise_sum(x))) << "n=" << n;
  }
}

TEST_F(SimdEquivalence, IncrementDotBitIdentical) {
  std::mt19937_64 rng(2);
  for (std::size_t n : kSizes) {
    const auto a = random_vector(n, rng);
    const auto b = random_vector(n + 1, rng);
    EXPECT_TRUE(same_bits(simd::scalar::increment_dot(a, b), simd::avx2::increment_dot(a, b))) << "n=" << n;
  }
}

TEST_F(SimdEquivalence, MaxAbsDiffWeightedBitIdentical) {
  std::mt19937_64 rng(3);
  for (std::size_t n : kSizes) {
    const auto x = random_vector(n, rng);
    auto w = random_vector(n, rng);
    for (double& v : w) v = std::fabs(v);
    const double base = n ? x[n / 2] : 0.5;
    const auto s = simd::scalar::max_abs_diff_weighted(x, base, w);
    const auto v = simd::avx2::max_abs_diff_weighted(x, base, w);
    EXPECT_TRUE(same_bits(s.value, v.value)) << "n=" << n;
    EXPECT_EQ(s.index, v.index) << "n=" << n;
  }
}

TEST_F(SimdEquivalence, MaxAbsDiffWeightedFirstIndexOnTies) {
  std::vector<double> x(37, 0.0), w(37, 1.0);
  x[5] = 2.0;
  x[30] = -2.0;
  const auto s = simd::scalar::max_abs_diff_weighted(x, 0.0, w);
  const auto v = simd::avx2::max_abs_diff_weighted(x, 0.0, w);
  EXPECT_EQ(s.index, 5u);
  EXPECT_EQ(v.index, 5u);
}

TEST_F(SimdEquivalence, LowerTriApplyBitIdentical) {
  std::mt19937_64 rng(4);
  for (std::size_t n : {1u, 2u, 5u, 33u}) {
    for (std::size_t fibers : {1u, 3u, 4u, 9u, 33u}) {
      auto lower = random_vector(n * n, rng);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) lower[i * n + j] = 0.0;
      }
      const auto in = random_vector(n * fibers, rng);
      std::vector<double> a(n * fibers), b(n * fibers);
      simd::scalar::lower_tri_apply(lower, n, in, fibers, a);
      simd::avx2::lower_tri_apply(lower, n, in, fibers, b);
      for (std::size_t k = 0; k < a.size(); ++k) ASSERT_TRUE(same_bits(a[k], b[k])) << n << "x" << fibers;
    }
  }
}

TEST(SimdKernels, ReferenceValues) {
  std::vector<double> x{1, 2, 3, 4, 5};
  EXPECT_EQ(simd::pairwise_sum(x), 15.0);
  std::vector<double> a{1, 1}, b{0, 2, 5};
  EXPECT_EQ(simd::increment_dot(a, b), 5.0);
  std::vector<double> w{1, 1, 1, 1, 1};
  const auto m = simd::max_abs_diff_weighted(x, 2.0, w);
  EXPECT_EQ(m.value, 3.0);
  EXPECT_EQ(m.index, 4u);
  EXPECT_EQ(simd::max_abs_diff_weighted({}, 0.0, {}).value, 0.0);
}

TEST(SimdKernels, ForcedIsaRoundTrip) {
  const auto before = simd::active_isa();
  EXPECT_EQ(simd::force_isa(simd::Isa::scalar), simd::Isa::scalar);
  std::vector<double> x(300, 0.1);
  const double s = simd::pairwise_sum(x);
  simd::force_isa(before);
  EXPECT_EQ(s, simd::scalar::pairwise_sum(x));
  EXPECT_EQ(simd::isa_name(simd::Isa::scalar), "scalar");
}
