#pragma once

#include <functional>
#include <vector>

#include "rough/field/field.hpp"

namespace rough::field {

using TimeFn = std::function<double(double)>;

/// Linear interpolation of samples on a strictly increasing grid; evaluation
/// outside the grid throws DomainError.
TimeFn interpolated(std::vector<double> times, std::vector<double> values);

/// W(t,x) = c.
RoughField constant_field(const Value& c, const Domain& domain);

/// W(t,x) = t b (vector field, dim_out = d).
RoughField drift_field(const Vec& b, const Domain& domain);

/// W(t,x) = g(t) x (vector field); Jacobian g(t) I, zero Hessian.
RoughField linear_field(TimeFn g, const Domain& domain, const HolderProfile& profile);

/// W(t,x) = g(t) (x_1 + ... + x_d) (scalar).
RoughField scalar_linear_field(TimeFn g, const Domain& domain, const HolderProfile& profile);

/// W^i(t,x) = g(t) sin(x_i) (vector field).
RoughField sine_field(TimeFn g, const Domain& domain, const HolderProfile& profile);

/// W(t,x) = g(t) (-x_2, x_1) on R^2: divergence free.
RoughField rotation_field(TimeFn g, const Domain& domain, const HolderProfile& profile);

/// Scalar W(t,x) = g(t) h(x) with optional spatial derivatives of h and a
/// time derivative g' used for the time derivative of W.
struct SpatialFn {
  std::function<double(const Point&)> value;
  std::function<Vec(const Point&)> gradient;  ///< optional
  std::function<Mat(const Point&)> hessian;   ///< optional
};
RoughField separable_field(TimeFn g, SpatialFn h, const Domain& domain, const HolderProfile& profile,
                           TimeFn g_prime = nullptr);

/// Vector field W(t,x) = g(t) V(x) with optional Jacobian and Hessian of V
/// (hess[i](j,k) = d_j d_k V^i).
struct VectorFn {
  std::function<Vec(const Point&)> value;
  std::function<Mat(const Point&)> jacobian;      ///< optional
  std::function<Hessian(const Point&)> hessian;  ///< optional
};
RoughField separable_vector_field(TimeFn g, VectorFn v, const Domain& domain, const HolderProfile& profile);

}  // namespace rough::field
