#pragma once

#include <vector>

#include "rough/field/field.hpp"

namespace rough::field {

/// Evaluation grid for discretised seminorms: a set of times and a set of
/// spatial points (not necessarily a tensor product).
struct GridSpec {
  std::vector<double> times;
  std::vector<Point> points;

  /// Uniform times on [a,b] and a uniform tensor grid with `per_axis` points
  /// on every axis of `box`.
  static GridSpec uniform(double a, double b, std::size_t n_times, const Domain& box,
                          std::size_t per_axis);
};

/// The (s,t,x,y) quadruple at which a grid supremum was attained.
struct Witness {
  double s = 0.0;
  double t = 0.0;
  Point x;
  Point y;
};

/// Grid estimate of the three suprema making up ||W||_{beta,tau,lambda;a,b}:
///   rect  = sup |W(s,x)-W(t,x)-W(s,y)+W(t,y)| / ((1+|x|+|y|)^beta |t-s|^tau |x-y|^lambda)
///   time  = sup |W(s,x)-W(t,x)| / ((1+|x|)^(beta+lambda) |t-s|^tau)
///   space = sup |W(t,y)-W(t,x)| / ((1+|x|+|y|)^beta |x-y|^lambda)
/// Vector-valued fields use the Euclidean norm of the increment.
struct HolderReport {
  double rect_seminorm = 0.0;
  double time_seminorm = 0.0;
  double space_seminorm = 0.0;
  GridSpec grid;
  Witness rect_witness;
  Witness time_witness;
  Witness space_witness;

  double total() const noexcept { return rect_seminorm + time_seminorm + space_seminorm; }
};

/// Exponents used by the estimate; defaults to the field's declared profile.
HolderReport estimate_seminorms(const RoughField& field, double a, double b, const GridSpec& grid);
HolderReport estimate_seminorms(const RoughField& field, double a, double b, const GridSpec& grid,
                                const HolderProfile& exponents);

/// Grid estimate of sup_{t, x != y} |G(t,x) - G(t,y)| / (|x-y|^alpha (1+|x|^beta+|y|^beta))
/// and sup_{t,x} |G(t,x)| / (1+|x|^beta) for the spatial Jacobian G of a field,
/// i.e. [grad f]_{beta,alpha} and [grad f]_{beta,infinity}. Uses the supplied
/// Jacobian, or central differences of spacing `fd_step` when absent.
struct GradientGrowthReport {
  double holder = 0.0;  ///< [grad f]_{beta,alpha}
  double sup = 0.0;     ///< [grad f]_{beta,infinity}
};
GradientGrowthReport estimate_gradient_growth(const RoughField& field, const GridSpec& grid,
                                              double alpha, double beta, double fd_step = 1e-5);

/// Same as above for the difference of two fields' Jacobians.
GradientGrowthReport estimate_gradient_difference(const RoughField& f, const RoughField& g,
                                                  const GridSpec& grid, double alpha, double beta,
                                                  double fd_step = 1e-5);

}  // namespace rough::field
