#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "rough/core/types.hpp"

namespace rough::field {

/// Time/space Hölder exponents and growth exponent of a rough field W(t,x).
struct HolderProfile {
  double tau = 1.0;
  double lambda = 1.0;
  double beta = 0.0;
  std::optional<double> gamma;  ///< exponent of the path the field is integrated against

  /// Throws ArgumentError unless 0 < tau, lambda <= 1 and beta >= 0.
  void validate() const;

  /// tau + lambda * gamma > 1, the Young condition for integrating along a
  /// gamma-Hölder path.
  bool young_condition(double path_gamma) const noexcept { return tau + lambda * path_gamma > 1.0; }
};

/// Closed time interval times an axis-aligned spatial box.
struct Domain {
  double t_lo = 0.0;
  double t_hi = 1.0;
  Vec x_lo;
  Vec x_hi;

  static Domain cube(double t_lo, double t_hi, int dim, double x_lo, double x_hi);
  int dim() const noexcept { return static_cast<int>(x_lo.size()); }
  bool contains(double t, const Point& x) const noexcept;
  bool contains_time(double t) const noexcept { return t >= t_lo && t <= t_hi; }
  bool contains_space(const Point& x) const noexcept;
  /// Shrinks by `margin` in time and every spatial direction.
  Domain shrunk(double margin) const;
};

/// Per-component spatial Hessians: component[i](j,k) = d_j d_k W^i.
struct Hessian {
  std::array<Mat, kMaxDim> component;
};

/// A deterministic field W : [t_lo,t_hi] x box -> R^dim_out with Hölder
/// metadata. Cheap to copy (callables are shared) and immutable, so
/// evaluation is safe from any number of threads.
///
/// The optional Jacobian follows the convention jac(i,k) = d_k W^i, a
/// dim_out x dim_in matrix; for scalar fields it is the gradient as a row.
class RoughField {
 public:
  using EvalFn = std::function<Value(double, const Point&)>;
  using JacobianFn = std::function<Mat(double, const Point&)>;
  using HessianFn = std::function<Hessian(double, const Point&)>;
  using TimeDerivativeFn = std::function<Value(double, const Point&)>;

  RoughField() = default;
  RoughField(std::string name, int dim_in, int dim_out, HolderProfile profile, Domain domain,
             EvalFn eval);

  RoughField with_jacobian(JacobianFn jac) const;
  RoughField with_hessian(HessianFn hess) const;
  RoughField with_time_derivative(TimeDerivativeFn dt) const;
  RoughField with_profile(HolderProfile profile) const;
  RoughField with_domain(Domain domain) const;
  RoughField with_name(std::string name) const;

  /// Domain-checked evaluation; throws DomainError outside the domain.
  Value operator()(double t, const Point& x) const;
  Value eval_unchecked(double t, const Point& x) const { return impl_->eval(t, x); }

  bool has_jacobian() const noexcept { return static_cast<bool>(impl_->jacobian); }
  bool has_hessian() const noexcept { return static_cast<bool>(impl_->hessian); }
  bool has_time_derivative() const noexcept { return static_cast<bool>(impl_->time_derivative); }

  /// Throws CapabilityError when the field was not declared differentiable.
  Mat jacobian(double t, const Point& x) const;
  Hessian hessian(double t, const Point& x) const;
  Value time_derivative(double t, const Point& x) const;

  const std::string& name() const noexcept { return impl_->name; }
  int dim_in() const noexcept { return impl_->dim_in; }
  int dim_out() const noexcept { return impl_->dim_out; }
  const HolderProfile& profile() const noexcept { return impl_->profile; }
  const Domain& domain() const noexcept { return impl_->domain; }
  bool valid() const noexcept { return static_cast<bool>(impl_); }

 private:
  struct Impl {
    std::string name;
    int dim_in = 1;
    int dim_out = 1;
    HolderProfile profile;
    Domain domain;
    EvalFn eval;
    JacobianFn jacobian;
    HessianFn hessian;
    TimeDerivativeFn time_derivative;
  };
  explicit RoughField(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  RoughField modified(const std::function<void(Impl&)>& edit) const;

  std::shared_ptr<const Impl> impl_;
};

/// W(t,x); identical inputs give identical bits.
Value eval_field(const RoughField& field, double t, const Point& x);

/// d-fold rectangle increment prod_j (I - V_{j,x}) W(t,.)(y): inclusion-
/// exclusion over the 2^d corners, sign (-1)^{#coordinates taken from x}.
Value rect_increment(const RoughField& field, double t, const Point& x, const Point& y);

/// W(s,x) - W(t,x) - W(s,y) + W(t,y).
Value time_space_increment(const RoughField& field, double s, double t, const Point& x,
                           const Point& y);

/// Central-difference Jacobian with spacing h, used where a field carries no
/// analytic derivative.
Mat finite_difference_jacobian(const RoughField& field, double t, const Point& x, double h);

}  // namespace rough::field
