#include "rough/core/rng.hpp"

#include <cmath>
#include <numbers>

namespace rough {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// splitmix64 finalizer, used to spread user seeds over the key space.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

Philox4x32::Block Philox4x32::generate(std::uint64_t key, const Block& counter) noexcept {
  Block ctr = counter;
  std::uint32_t k0 = static_cast<std::uint32_t>(key);
  std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return ctr;
}

double to_open_unit(std::uint64_t bits) noexcept {
  // 52 random bits offset by half an ulp: both endpoints stay unreachable after rounding.
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

namespace {

inline std::array<double, 2> uniform_pair(std::uint64_t key, std::uint64_t stream,
                                          std::uint64_t block) {
  const Philox4x32::Block ctr{static_cast<std::uint32_t>(block),
                              static_cast<std::uint32_t>(block >> 32),
                              static_cast<std::uint32_t>(stream),
                              static_cast<std::uint32_t>(stream >> 32)};
  const auto r = Philox4x32::generate(key, ctr);
  const std::uint64_t a = (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
  const std::uint64_t b = (static_cast<std::uint64_t>(r[2]) << 32) | r[3];
  return {to_open_unit(a), to_open_unit(b)};
}

}  // namespace

NormalStream::NormalStream(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_(mix64(seed)), stream_(stream) {}

void NormalStream::refill() noexcept {
  const auto u = uniform_pair(key_, stream_, block_++);
  const double radius = std::sqrt(-2.0 * std::log(u[0]));
  const double angle = 2.0 * std::numbers::pi * u[1];
  cache_ = {radius * std::cos(angle), radius * std::sin(angle)};
  cached_ = 2;
}

double NormalStream::next() noexcept {
  if (cached_ == 0) refill();
  ++position_;
  return cache_[2 - cached_--];
}

void NormalStream::skip_to(std::uint64_t index) noexcept {
  block_ = index / 2;
  cached_ = 0;
  position_ = block_ * 2;
  if (index % 2 == 1) next();
}

UniformStream::UniformStream(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_(mix64(seed ^ 0x5851F42D4C957F2Dull)), stream_(stream) {}

double UniformStream::next() noexcept {
  if (cached_ == 0) {
    cache_ = uniform_pair(key_, stream_, block_++);
    cached_ = 2;
  }
  return cache_[2 - cached_--];
}

}  // namespace rough
