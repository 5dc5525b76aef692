#include "rough/sewing/sewing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "rough/core/errors.hpp"
#include "rough/core/parallel.hpp"
#include "rough/simd/kernels.hpp"

namespace rough::sewing {

Partition::Partition(std::vector<double> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw ArgumentError("Partition: need >= 2 points");
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const double gap = points_[i] - points_[i - 1];
    if (!(gap > 0.0)) throw ArgumentError("Partition: points must increase strictly");
    mesh_ = std::max(mesh_, gap);
  }
}

Partition Partition::uniform(double a, double b, std::size_t cells) {
  if (cells < 1 || !(b > a)) throw ArgumentError("Partition::uniform: need a < b and >= 1 cell");
  std::vector<double> p(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i) {
    p[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(cells);
  }
  p.back() = b;
  return Partition(std::move(p));
}

namespace {
constexpr std::size_t kParallelCells = 4096;
}

Value riemann_sum(const Germ& germ, const Partition& partition) {
  const auto& t = partition.points();
  const std::size_t m = partition.cells();
  std::vector<Value> terms(m);
  auto body = [&](std::size_t i) { terms[i] = germ.mu(t[i], t[i + 1]); };
  if (m >= kParallelCells) {
    parallel_for(m, body);
  } else {
    for (std::size_t i = 0; i < m; ++i) body(i);
  }
  const auto dim = terms.front().size();
  Value total(dim);
  std::vector<double> column(m);
  for (Eigen::Index c = 0; c < dim; ++c) {
    for (std::size_t i = 0; i < m; ++i) column[i] = terms[i](c);
    total(c) = simd::pairwise_sum(column);
  }
  return total;
}

SewingResult sew(const Germ& germ, double a, double b, const SewOptions& options) {
  if (!(a < b)) throw ArgumentError("sew: need a < b");
  if (!(options.tol > 0.0)) throw ArgumentError("sew: tol must be positive");
  if (options.max_levels < 1 || options.max_levels > 30) throw ArgumentError("sew: max_levels must lie in [1,30]");
  SewingResult result;
  if (germ.defect_constant) {
    const double eps = germ.regularity;
    result.theoretical_bound = *germ.defect_constant / (1.0 - std::pow(2.0, -eps)) * std::pow(b - a, 1.0 + eps);
  }
  Value previous;
  int below = 0;
  for (int level = 0; level <= options.max_levels; ++level) {
    const std::size_t cells = std::size_t{1} << level;
    const Value current = riemann_sum(germ, Partition::uniform(a, b, cells));
    result.trace.push_back({(b - a) / static_cast<double>(cells), current});
    result.value = current;
    if (level > 0) {
      result.error_estimate = (current - previous).norm();
      below = result.error_estimate < options.tol ? below + 1 : 0;
      if (level >= options.min_levels && below >= std::max(1, options.confirm_levels)) {
        result.converged = true;
        return result;
      }
    }
    previous = current;
  }
  if (options.require_convergence) {
    std::vector<std::pair<double, double>> trace;
    for (const auto& e : result.trace) trace.emplace_back(e.mesh, e.value(0));
    char msg[128];
    std::snprintf(msg, sizeof msg, "sew: successive sums still differ by %.3e after %d levels",
                  result.error_estimate, options.max_levels);
    throw ConvergenceError(msg, std::move(trace));
  }
  result.warnings.push_back("tolerance not reached within max_levels");
  return result;
}

std::vector<std::pair<double, double>> successive_differences(const SewingResult& result) {
  std::vector<std::pair<double, double>> out;
  for (std::size_t k = 1; k < result.trace.size(); ++k) {
    out.emplace_back(static_cast<double>(k), (result.trace[k].value - result.trace[k - 1].value).norm());
  }
  return out;
}

}  // namespace rough::sewing
