#pragma once

#include <span>
#include <vector>

namespace rough {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y = intercept + slope * x. Needs >= 2 points.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// Fits log2|y| against x, skipping entries with y == 0. Used for dyadic
/// convergence orders: the returned slope is negated so that a decaying
/// sequence reports a positive rate.
LinearFit fit_decay_rate_log2(std::span<const double> level, std::span<const double> magnitude);

struct SampleMoments {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double std_error = 0.0;  // sqrt(variance / n)
  std::size_t count = 0;
};

/// Mean and variance with pairwise-summed accumulation (deterministic).
SampleMoments sample_moments(std::span<const double> x);

double normal_cdf(double z) noexcept;

}  // namespace rough
