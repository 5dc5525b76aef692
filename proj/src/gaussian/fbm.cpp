#include "rough/gaussian/fbm.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>

#include "rough/core/errors.hpp"
#include "rough/core/rng.hpp"

namespace rough::gaussian {

double fbm_covariance(double hurst, double s, double t) noexcept {
  const double h2 = 2.0 * hurst;
  return 0.5 * (std::pow(std::fabs(s), h2) + std::pow(std::fabs(t), h2) - std::pow(std::fabs(s - t), h2));
}

std::vector<double> uniform_times(std::size_t n, double horizon) {
  std::vector<double> t(n + 1);
  for (std::size_t k = 0; k <= n; ++k) t[k] = horizon * static_cast<double>(k) / static_cast<double>(n);
  t.back() = horizon;
  return t;
}

namespace {

// Planner calls are not thread-safe in FFTW; execution on distinct arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

void forward_fft(std::vector<std::complex<double>>& data) {
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(data.size()), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(plan);
}

}  // namespace

std::vector<double> fbm_path(double hurst, std::size_t n, double horizon, std::uint64_t seed,
                             std::uint64_t stream) {
  if (!(hurst > 0.0 && hurst < 1.0)) throw ArgumentError("fbm_path: Hurst exponent must lie in (0,1)");
  if (n < 1) throw ArgumentError("fbm_path: need >= 1 step");
  if (!(horizon > 0.0)) throw ArgumentError("fbm_path: horizon must be positive");

  // Unit-step fractional Gaussian noise autocovariance, embedded in a circulant
  // of size 2n.
  const std::size_t m = 2 * n;
  const double h2 = 2.0 * hurst;
  auto gamma = [h2](double k) {
    return 0.5 * (std::pow(std::fabs(k + 1.0), h2) - 2.0 * std::pow(std::fabs(k), h2) + std::pow(std::fabs(k - 1.0), h2));
  };
  std::vector<std::complex<double>> c(m);
  for (std::size_t k = 0; k <= n; ++k) c[k] = gamma(static_cast<double>(k));
  for (std::size_t k = n + 1; k < m; ++k) c[k] = gamma(static_cast<double>(m - k));
  forward_fft(c);
  double largest = 0.0;
  for (const auto& z : c) largest = std::max(largest, std::fabs(z.real()));
  std::vector<double> eig(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double lam = c[k].real();
    if (lam < -1e-9 * largest) {
      throw NumericalError("fbm_path: circulant embedding has a negative eigenvalue " + std::to_string(lam));
    }
    eig[k] = std::max(lam, 0.0);
  }

  NormalStream normal(seed, stream);
  std::vector<std::complex<double>> z(m);
  const double dm = static_cast<double>(m);
  z[0] = std::sqrt(eig[0] / dm) * normal.next();
  z[n] = std::sqrt(eig[n] / dm) * normal.next();
  for (std::size_t k = 1; k < n; ++k) {
    const double scale = std::sqrt(eig[k] / (2.0 * dm));
    const double re = normal.next();
    const double im = normal.next();
    z[k] = scale * std::complex<double>(re, im);
    z[m - k] = std::conj(z[k]);
  }
  forward_fft(z);

  const double step_scale = std::pow(horizon / static_cast<double>(n), hurst);
  std::vector<double> path(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) path[k + 1] = path[k] + step_scale * z[k].real();
  return path;
}

}  // namespace rough::gaussian
