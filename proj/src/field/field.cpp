#include "rough/field/field.hpp"

#include <sstream>

#include "rough/core/errors.hpp"

namespace rough::field {

void HolderProfile::validate() const {
  if (!(tau > 0.0 && tau <= 1.0)) throw ArgumentError("HolderProfile: tau must lie in (0,1]");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ArgumentError("HolderProfile: lambda must lie in (0,1]");
  if (!(beta >= 0.0)) throw ArgumentError("HolderProfile: beta must be nonnegative");
  if (gamma && !(*gamma > 0.0 && *gamma <= 1.0)) throw ArgumentError("HolderProfile: gamma must lie in (0,1]");
}

Domain Domain::cube(double t_lo, double t_hi, int dim, double x_lo, double x_hi) {
  Domain d;
  d.t_lo = t_lo;
  d.t_hi = t_hi;
  d.x_lo = Vec::Constant(dim, x_lo);
  d.x_hi = Vec::Constant(dim, x_hi);
  return d;
}

bool Domain::contains_space(const Point& x) const noexcept {
  if (x.size() != x_lo.size()) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(x(i) >= x_lo(i) && x(i) <= x_hi(i))) return false;
  }
  return true;
}

bool Domain::contains(double t, const Point& x) const noexcept {
  return contains_time(t) && contains_space(x);
}

Domain Domain::shrunk(double margin) const {
  Domain d = *this;
  d.t_lo += margin;
  d.t_hi -= margin;
  d.x_lo.array() += margin;
  d.x_hi.array() -= margin;
  if (d.t_lo > d.t_hi || (d.x_lo.array() > d.x_hi.array()).any()) {
    throw ArgumentError("Domain::shrunk: margin exceeds the domain");
  }
  return d;
}

RoughField::RoughField(std::string name, int dim_in, int dim_out, HolderProfile profile,
                       Domain domain, EvalFn eval) {
  if (dim_in < 1 || dim_in > kMaxDim || dim_out < 1 || dim_out > kMaxDim) {
    throw ArgumentError("RoughField: dimensions must lie in [1, " + std::to_string(kMaxDim) + "]");
  }
  if (domain.dim() != dim_in) throw ArgumentError("RoughField: domain dimension mismatch");
  if (!eval) throw ArgumentError("RoughField: missing evaluation function");
  profile.validate();
  auto impl = std::make_shared<Impl>();
  impl->name = std::move(name);
  impl->dim_in = dim_in;
  impl->dim_out = dim_out;
  impl->profile = profile;
  impl->domain = std::move(domain);
  impl->eval = std::move(eval);
  impl_ = std::move(impl);
}

RoughField RoughField::modified(const std::function<void(Impl&)>& edit) const {
  auto copy = std::make_shared<Impl>(*impl_);
  edit(*copy);
  return RoughField(std::shared_ptr<const Impl>(std::move(copy)));
}

RoughField RoughField::with_jacobian(JacobianFn jac) const {
  return modified([&](Impl& i) { i.jacobian = std::move(jac); });
}

RoughField RoughField::with_hessian(HessianFn hess) const {
  return modified([&](Impl& i) { i.hessian = std::move(hess); });
}

RoughField RoughField::with_time_derivative(TimeDerivativeFn dt) const {
  return modified([&](Impl& i) { i.time_derivative = std::move(dt); });
}

RoughField RoughField::with_profile(HolderProfile profile) const {
  profile.validate();
  return modified([&](Impl& i) { i.profile = profile; });
}

RoughField RoughField::with_domain(Domain domain) const {
  if (domain.dim() != dim_in()) throw ArgumentError("RoughField: domain dimension mismatch");
  return modified([&](Impl& i) { i.domain = std::move(domain); });
}

RoughField RoughField::with_name(std::string name) const {
  return modified([&](Impl& i) { i.name = std::move(name); });
}

namespace {

[[noreturn]] void out_of_domain(const std::string& name, double t, const Point& x) {
  std::ostringstream os;
  os << "field '" << name << "' evaluated outside its domain at t=" << t << ", x=(";
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? "," : "") << x(i);
  os << ")";
  throw DomainError(os.str());
}

}  // namespace

Value RoughField::operator()(double t, const Point& x) const {
  if (!impl_->domain.contains(t, x)) out_of_domain(impl_->name, t, x);
  return impl_->eval(t, x);
}

Mat RoughField::jacobian(double t, const Point& x) const {
  if (!impl_->jacobian) throw CapabilityError("field '" + impl_->name + "' has no Jacobian");
  if (!impl_->domain.contains(t, x)) out_of_domain(impl_->name, t, x);
  return impl_->jacobian(t, x);
}

Hessian RoughField::hessian(double t, const Point& x) const {
  if (!impl_->hessian) throw CapabilityError("field '" + impl_->name + "' has no Hessian");
  if (!impl_->domain.contains(t, x)) out_of_domain(impl_->name, t, x);
  return impl_->hessian(t, x);
}

Value RoughField::time_derivative(double t, const Point& x) const {
  if (!impl_->time_derivative) {
    throw CapabilityError("field '" + impl_->name + "' has no time derivative");
  }
  if (!impl_->domain.contains(t, x)) out_of_domain(impl_->name, t, x);
  return impl_->time_derivative(t, x);
}

Value eval_field(const RoughField& field, double t, const Point& x) { return field(t, x); }

Value rect_increment(const RoughField& field, double t, const Point& x, const Point& y) {
  const int d = field.dim_in();
  if (x.size() != d || y.size() != d) throw ArgumentError("rect_increment: point dimension mismatch");
  Value total = Value::Zero(field.dim_out());
  Point corner(d);
  for (unsigned mask = 0; mask < (1u << d); ++mask) {
    int substituted = 0;
    for (int j = 0; j < d; ++j) {
      const bool from_x = (mask >> j) & 1u;
      corner(j) = from_x ? x(j) : y(j);
      substituted += from_x ? 1 : 0;
    }
    const Value v = field(t, corner);
    if (substituted % 2 == 0) {
      total += v;
    } else {
      total -= v;
    }
  }
  return total;
}

Value time_space_increment(const RoughField& field, double s, double t, const Point& x,
                           const Point& y) {
  return (field(t, y) - field(s, y)) - (field(t, x) - field(s, x));
}

Mat finite_difference_jacobian(const RoughField& field, double t, const Point& x, double h) {
  const int d = field.dim_in();
  Mat jac(field.dim_out(), d);
  Point xp = x, xm = x;
  for (int k = 0; k < d; ++k) {
    xp(k) = x(k) + h;
    xm(k) = x(k) - h;
    jac.col(k) = (field.eval_unchecked(t, xp) - field.eval_unchecked(t, xm)) / (2.0 * h);
    xp(k) = x(k);
    xm(k) = x(k);
  }
  return jac;
}

}  // namespace rough::field
