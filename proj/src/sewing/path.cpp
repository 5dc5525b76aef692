#include "rough/sewing/path.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rough/core/errors.hpp"
#include "rough/simd/kernels.hpp"

namespace rough::sewing {

Path::Path(std::vector<double> times, std::vector<Point> values, double gamma)
    : times_(std::move(times)), values_(std::move(values)), gamma_(gamma) {
  if (times_.size() < 2) throw ArgumentError("Path: need >= 2 nodes");
  if (times_.size() != values_.size()) throw ArgumentError("Path: times/values length mismatch");
  if (!(gamma_ > 0.0 && gamma_ <= 1.0)) throw ArgumentError("Path: gamma must lie in (0,1]");
  const auto d = values_.front().size();
  if (d < 1 || d > kMaxDim) throw ArgumentError("Path: bad value dimension");
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (values_[i].size() != d) throw ArgumentError("Path: inconsistent value dimension");
    if (i > 0 && !(times_[i] > times_[i - 1])) throw ArgumentError("Path: times must increase strictly");
  }
  const std::size_t n = times_.size() - 1;
  step_ = (times_.back() - times_.front()) / static_cast<double>(n);
  uniform_ = true;
  for (std::size_t i = 0; i <= n; ++i) {
    const double expected = times_.front() + step_ * static_cast<double>(i);
    if (std::fabs(times_[i] - expected) > 1e-12 * (1.0 + std::fabs(expected))) {
      uniform_ = false;
      break;
    }
  }
  holder_cache_ = std::make_shared<double>(std::numeric_limits<double>::quiet_NaN());
}

Path Path::scalar(std::vector<double> times, const std::vector<double>& values, double gamma) {
  std::vector<Point> pts;
  pts.reserve(values.size());
  for (double v : values) pts.push_back(scalar_value(v));
  return Path(std::move(times), std::move(pts), gamma);
}

Point Path::at(double t) const {
  if (!(t >= times_.front() && t <= times_.back())) {
    throw DomainError("Path::at: t=" + std::to_string(t) + " outside [" +
                      std::to_string(times_.front()) + ", " + std::to_string(times_.back()) + "]");
  }
  const std::size_t last = times_.size() - 2;
  std::size_t i;
  if (uniform_) {
    const double pos = std::floor((t - times_.front()) / step_);
    i = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(last)));
    // Guard the rounding of the division against the stored nodes.
    if (t < times_[i] && i > 0) --i;
    if (t > times_[i + 1] && i < last) ++i;
  } else {
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    i = std::min(static_cast<std::size_t>(it - times_.begin()) - 1, last);
  }
  if (t == times_[i]) return values_[i];
  if (t == times_[i + 1]) return values_[i + 1];
  const double w = (t - times_[i]) / (times_[i + 1] - times_[i]);
  return values_[i] + w * (values_[i + 1] - values_[i]);
}

double Path::holder_norm() const {
  if (std::isnan(*holder_cache_)) *holder_cache_ = holder_norm(gamma_);
  return *holder_cache_;
}

double Path::holder_norm(double exponent) const {
  const std::size_t n = times_.size();
  const bool scalar_path = dim() == 1;
  std::vector<double> column;
  if (scalar_path) {
    column.resize(n);
    for (std::size_t i = 0; i < n; ++i) column[i] = values_[i](0);
  }
  std::vector<double> w(n);
  if (uniform_) {
    for (std::size_t lag = 1; lag < n; ++lag) w[lag - 1] = 1.0 / std::pow(step_ * static_cast<double>(lag), exponent);
  }
  double best = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const std::size_t m = n - i - 1;
    if (!uniform_) {
      for (std::size_t k = 0; k < m; ++k) w[k] = 1.0 / std::pow(times_[i + 1 + k] - times_[i], exponent);
    }
    if (scalar_path) {
      const auto r = simd::max_abs_diff_weighted(std::span<const double>(column.data() + i + 1, m),
                                                 column[i], std::span<const double>(w.data(), m));
      best = std::max(best, r.value);
    } else {
      for (std::size_t k = 0; k < m; ++k) {
        best = std::max(best, (values_[i + 1 + k] - values_[i]).norm() * w[k]);
      }
    }
  }
  return best;
}

double Path::sup_norm() const {
  double best = 0.0;
  for (const Point& p : values_) best = std::max(best, p.norm());
  return best;
}

Path Path::minus(const Path& other) const {
  if (other.times_ != times_) throw ArgumentError("Path::minus: paths live on different grids");
  std::vector<Point> diff(values_.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = values_[i] - other.values_[i];
  return Path(times_, std::move(diff), std::min(gamma_, other.gamma_));
}

Path Path::shifted(const Point& h) const {
  std::vector<Point> v = values_;
  for (Point& p : v) p += h;
  return Path(times_, std::move(v), gamma_);
}

double holder_seminorm(const std::vector<double>& times, const std::vector<double>& values,
                       double gamma) {
  return Path::scalar(times, values, 1.0).holder_norm(gamma);
}

}  // namespace rough::sewing
