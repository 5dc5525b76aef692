#pragma once

#include <memory>
#include <vector>

#include "rough/core/types.hpp"

namespace rough::sewing {

/// A path sampled on a strictly increasing time grid, extended between nodes
/// by linear interpolation.
class Path {
 public:
  Path() = default;
  /// Throws ArgumentError on fewer than two nodes, non-increasing times,
  /// mismatched value dimensions or gamma outside (0,1].
  Path(std::vector<double> times, std::vector<Point> values, double gamma);

  /// Scalar convenience constructor.
  static Path scalar(std::vector<double> times, const std::vector<double>& values, double gamma);

  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<Point>& values() const noexcept { return values_; }
  double gamma() const noexcept { return gamma_; }
  int dim() const noexcept { return static_cast<int>(values_.front().size()); }
  std::size_t size() const noexcept { return times_.size(); }
  double t_begin() const noexcept { return times_.front(); }
  double t_end() const noexcept { return times_.back(); }
  bool uniform() const noexcept { return uniform_; }

  /// Linear interpolation; throws DomainError outside [t_begin, t_end].
  Point at(double t) const;

  /// sup over grid pairs of |phi(t)-phi(s)| / |t-s|^gamma. Computed on first
  /// use and cached.
  double holder_norm() const;
  /// Same supremum for another exponent (not cached).
  double holder_norm(double exponent) const;
  /// max over nodes of |phi|.
  double sup_norm() const;

  /// Pointwise difference of two paths on the same grid.
  Path minus(const Path& other) const;
  /// Path shifted by a constant vector.
  Path shifted(const Point& h) const;

 private:
  std::vector<double> times_;
  std::vector<Point> values_;
  double gamma_ = 1.0;
  bool uniform_ = false;
  double step_ = 0.0;
  std::shared_ptr<double> holder_cache_;
};

/// Grid Hölder seminorm of scalar samples, sup |x_j - x_i| / |t_j - t_i|^gamma.
double holder_seminorm(const std::vector<double>& times, const std::vector<double>& values,
                       double gamma);

}  // namespace rough::sewing
