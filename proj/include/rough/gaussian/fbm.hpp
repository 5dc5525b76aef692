#pragma once

#include <cstdint>
#include <vector>

namespace rough::gaussian {

/// Covariance of two-sided fractional Brownian motion,
/// R_H(s,t) = (|s|^{2H} + |t|^{2H} - |s-t|^{2H}) / 2.
double fbm_covariance(double hurst, double s, double t) noexcept;

/// Fractional Brownian motion on the uniform grid t_k = k T / n, k = 0..n,
/// with B(0) = 0, by circulant embedding of the increment covariance
/// (Davies-Harte). The draw is a pure function of (seed, stream).
std::vector<double> fbm_path(double hurst, std::size_t n, double horizon, std::uint64_t seed,
                             std::uint64_t stream = 0);

/// Uniform grid k T / n, k = 0..n.
std::vector<double> uniform_times(std::size_t n, double horizon);

}  // namespace rough::gaussian
