#pragma once

#include <array>
#include <cstdint>

namespace rough {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A draw is a
/// pure function of (key, counter), so every Monte-Carlo path owns an
/// independent stream addressed by (seed, stream index) and the result does
/// not depend on scheduling.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  static Block generate(std::uint64_t key, const Block& counter) noexcept;
};

/// Standard-normal stream keyed by (seed, stream). Draw n is a pure function
/// of (seed, stream, n); `skip_to` allows random access.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream) noexcept;

  double next() noexcept;
  void skip_to(std::uint64_t index) noexcept;
  std::uint64_t position() const noexcept { return position_; }

 private:
  void refill() noexcept;

  std::uint64_t key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::uint64_t position_ = 0;
  std::array<double, 2> cache_{};
  int cached_ = 0;
};

/// Uniform (0,1) stream with the same addressing scheme.
class UniformStream {
 public:
  UniformStream(std::uint64_t seed, std::uint64_t stream) noexcept;
  double next() noexcept;

 private:
  std::uint64_t key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<double, 2> cache_{};
  int cached_ = 0;
};

/// Maps the top 52 of 64 random bits to the open interval (0,1).
double to_open_unit(std::uint64_t bits) noexcept;

}  // namespace rough
