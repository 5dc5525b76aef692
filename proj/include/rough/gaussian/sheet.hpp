#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rough/field/grid_field.hpp"

namespace rough::gaussian {

/// Componentwise Hurst exponents, each in (0,1).
struct HurstVector {
  std::vector<double> H;
  void validate() const;
  std::size_t dim() const noexcept { return H.size(); }
};

/// A fractional Brownian sheet drawn on a tensor grid (row-major, last axis
/// fastest).
struct SheetSample {
  std::vector<std::vector<double>> axes;
  std::vector<double> values;
  HurstVector hurst;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  field::GridArray as_grid() const { return {axes, values}; }
  double at(const std::vector<std::size_t>& index) const;
};

/// Exact-covariance sampler for E W(x)W(y) = prod_i R_{H_i}(x_i, y_i). Each
/// axis is factorised once on its nonzero nodes; a draw applies the factors
/// along every axis to an i.i.d. normal array and leaves zeros on the
/// hyperplanes {x_i = 0}.
class SheetSampler {
 public:
  /// Axes must be strictly increasing, contain 0, and hold at most 10^6
  /// nodes in total. Throws NumericalError if a factorisation fails.
  SheetSampler(HurstVector hurst, std::vector<std::vector<double>> axes);

  SheetSample draw(std::uint64_t seed, std::uint64_t stream = 0) const;
  /// Draws streams 0..count-1 in parallel.
  std::vector<SheetSample> draw_many(std::uint64_t seed, std::size_t count) const;

  const std::vector<std::vector<double>>& axes() const noexcept { return axes_; }

 private:
  HurstVector hurst_;
  std::vector<std::vector<double>> axes_;
  std::vector<std::vector<std::size_t>> nonzero_;  // per axis, indices of nonzero nodes
  std::vector<std::vector<double>> factors_;       // per axis, row-major lower factor
};

SheetSample sample_fbs(const HurstVector& hurst, const std::vector<std::vector<double>>& axes,
                       std::uint64_t seed);

/// Index of `value` on `axis`; throws ArgumentError unless it is a node.
std::size_t node_index(const std::vector<double>& axis, double value);

/// Rectangle increment of a sheet between grid nodes x and y (per-axis
/// indices): inclusion-exclusion over the 2^d corners.
double sheet_rect_increment(const SheetSample& s, const std::vector<std::size_t>& x,
                            const std::vector<std::size_t>& y);

struct MomentReport {
  double empirical = 0.0;  ///< sample mean of W(box)^2
  double target = 0.0;     ///< prod |x_i - y_i|^{2 H_i}
  double std_error = 0.0;
  double z = 0.0;          ///< (empirical - target) / std_error, 0 if both vanish
};

MomentReport rect_increment_moment_check(const std::vector<SheetSample>& samples,
                                         const std::vector<double>& x, const std::vector<double>& y);

enum class SupMetric { intrinsic, euclidean };

struct SupReport {
  double value = 0.0;
  std::size_t admissible_pairs = 0;
  std::optional<std::string> warning;
};

/// W*(delta, R): exhaustive scan of |W(box[x,y])| over grid pairs with, per
/// axis, |x_i - y_i|^{H_i} <= delta_i and |x_i|^{H_i}, |y_i|^{H_i} <= R
/// (intrinsic), or |x_i - y_i| <= delta_i and |x_i|, |y_i| <= R (euclidean).
/// Degenerate boxes are not counted; an empty scan returns 0 with a warning.
SupReport empirical_sup_increment(const SheetSample& sample, const std::vector<double>& delta, double R,
                                  SupMetric metric = SupMetric::intrinsic);

/// sigma(delta, R) = prod delta_i under the intrinsic metric and
/// prod delta_i^{H_i} under the euclidean one.
double sup_scale(const HurstVector& hurst, const std::vector<double>& delta, SupMetric metric);

struct ChainingConstants {
  double entropy = 1.0;
  double modulus = 1.0;
};

/// omega_i(delta) = delta sqrt(log(1/u0)) + int_0^{u0} u^{H-1} / sqrt(log(1/u)) du,
/// u0 = delta^{1/H}; the integral is evaluated after u = exp(-v^2).
double chaining_modulus(double hurst, double delta);

/// entropy * prod delta_i sqrt(log prod 2 R^{1/H_i})
///   + modulus * sum_i (prod_{j != i} delta_j) omega_i(delta_i).
/// Needs 0 < delta_i <= 1 and prod 2 R^{1/H_i} > 1.
double chaining_bound(const std::vector<double>& delta, double R, const HurstVector& hurst,
                      const ChainingConstants& constants = {});

struct TailRow {
  double r = 0.0;
  double frequency = 0.0;
  double bound = 0.0;       ///< 2 exp(-r^2/2)
  double half_width = 0.0;  ///< 95% Wilson half-width of the frequency
  bool pass = false;
};

struct ConcentrationReport {
  double mean = 0.0;       ///< sample estimate of m(delta, R)
  double mean_ci = 0.0;    ///< 1.96 standard errors
  double sigma = 0.0;
  std::size_t samples = 0;
  std::vector<TailRow> rows;
  bool pass = false;
};

/// Exceedance frequencies of |W* - m| / sigma > r against 2 exp(-r^2/2);
/// a row passes when frequency <= bound + 3 half-widths. Needs >= 500 values.
ConcentrationReport concentration_check(const std::vector<double>& sup_values, double sigma,
                                        const std::vector<double>& r_values);
ConcentrationReport concentration_check(const std::vector<SheetSample>& samples,
                                        const std::vector<double>& delta, double R,
                                        const std::vector<double>& r_values,
                                        SupMetric metric = SupMetric::intrinsic);

struct MkResult {
  double value = 0.0;
  std::size_t nodes = 0;
  std::optional<std::string> warning;
};

/// Average of the sample over the grid nodes u with |u_i - t_i|^{H_i} <= D_i 2^{-k_i}
/// on every axis, weighted by normalised Lebesgue measure (dual cell widths).
/// An empty ball returns the nearest node value with a warning. D defaults to
/// the intrinsic extent max_u |u_i|^{H_i} of each axis.
MkResult mk_average(const SheetSample& sample, const std::vector<int>& k, const std::vector<double>& t,
                    const std::vector<double>& D = {});

/// M_k over the rectangle [s,t]: inclusion-exclusion of mk_average at the corners.
double mk_rect_increment(const SheetSample& sample, const std::vector<int>& k, const std::vector<double>& s,
                         const std::vector<double>& t, const std::vector<double>& D = {});

}  // namespace rough::gaussian
