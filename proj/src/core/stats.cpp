#include "rough/core/stats.hpp"

#include <cmath>

#include "rough/core/errors.hpp"
#include "rough/simd/kernels.hpp"

namespace rough {

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ArgumentError("fit_line: need >= 2 paired points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw ArgumentError("fit_line: abscissae are all equal");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

LinearFit fit_decay_rate_log2(std::span<const double> level, std::span<const double> magnitude) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < level.size(); ++i) {
    if (magnitude[i] != 0.0) {
      xs.push_back(level[i]);
      ys.push_back(std::log2(std::fabs(magnitude[i])));
    }
  }
  LinearFit fit = fit_line(xs, ys);
  fit.slope = -fit.slope;
  return fit;
}

SampleMoments sample_moments(std::span<const double> x) {
  SampleMoments m;
  m.count = x.size();
  if (x.empty()) return m;
  m.mean = simd::pairwise_sum(x) / static_cast<double>(x.size());
  if (x.size() > 1) {
    std::vector<double> sq(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) sq[i] = (x[i] - m.mean) * (x[i] - m.mean);
    m.variance = simd::pairwise_sum(sq) / static_cast<double>(x.size() - 1);
    m.std_error = std::sqrt(m.variance / static_cast<double>(x.size()));
  }
  return m;
}

double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace rough
