#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rough/core/types.hpp"

namespace rough::sewing {

/// Two-point function mu(s,t) whose three-point defect
/// |mu(s,t) - mu(s,c) - mu(c,t)| is O(|t-s|^{1+regularity}).
struct Germ {
  std::function<Value(double, double)> mu;
  double regularity = 0.0;
  std::optional<double> defect_constant;  ///< K, when known
};

/// Strictly increasing times a = t_0 < ... < t_m = b.
class Partition {
 public:
  explicit Partition(std::vector<double> points);
  static Partition uniform(double a, double b, std::size_t cells);
  const std::vector<double>& points() const noexcept { return points_; }
  std::size_t cells() const noexcept { return points_.size() - 1; }
  double mesh() const noexcept { return mesh_; }

 private:
  std::vector<double> points_;
  double mesh_ = 0.0;
};

struct SewOptions {
  double tol = 1e-8;
  int max_levels = 20;
  /// Never stop before this dyadic level (level k has 2^k cells).
  int min_levels = 4;
  /// Number of consecutive successive differences that must fall below tol.
  /// One noisy dip in the rough regime is not taken as convergence.
  int confirm_levels = 2;
  /// Throw ConvergenceError if tol is not met by max_levels; otherwise return
  /// the last sum with converged = false.
  bool require_convergence = true;
};

struct TraceEntry {
  double mesh = 0.0;
  Value value;
};

struct SewingResult {
  Value value;
  std::vector<TraceEntry> trace;
  double error_estimate = 0.0;             ///< |J_k - J_{k-1}| at the last level
  std::optional<double> theoretical_bound;  ///< K (1-2^{-eps})^{-1} |b-a|^{1+eps}
  bool converged = false;
  std::vector<std::string> warnings;
};

/// sum_i mu(t_i, t_{i+1}), summed per component with a fixed pairwise tree.
Value riemann_sum(const Germ& germ, const Partition& partition);

/// Dyadic uniform refinement of the Riemann sums of `germ` on [a,b].
SewingResult sew(const Germ& germ, double a, double b, const SewOptions& options = {});

/// Successive differences |J_{k+1} - J_k| from a trace, as (level, magnitude)
/// with the level of the finer sum.
std::vector<std::pair<double, double>> successive_differences(const SewingResult& result);

}  // namespace rough::sewing
