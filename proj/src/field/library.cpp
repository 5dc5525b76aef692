#include "rough/field/library.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "rough/core/errors.hpp"

namespace rough::field {

TimeFn interpolated(std::vector<double> times, std::vector<double> values) {
  if (times.size() < 2 || times.size() != values.size()) {
    throw ArgumentError("interpolated: need >= 2 samples with matching lengths");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw ArgumentError("interpolated: times must increase strictly");
  }
  struct Table {
    std::vector<double> t, v;
    double origin, inv_step;
    bool uniform;
  };
  auto tab = std::make_shared<Table>();
  tab->t = std::move(times);
  tab->v = std::move(values);
  const std::size_t n = tab->t.size() - 1;
  const double step = (tab->t.back() - tab->t.front()) / static_cast<double>(n);
  tab->origin = tab->t.front();
  tab->inv_step = 1.0 / step;
  tab->uniform = true;
  for (std::size_t i = 0; i <= n; ++i) {
    const double e = tab->origin + step * static_cast<double>(i);
    if (std::fabs(tab->t[i] - e) > 1e-12 * (1.0 + std::fabs(e))) {
      tab->uniform = false;
      break;
    }
  }
  std::shared_ptr<const Table> shared = tab;
  return [shared](double s) {
    const auto& t = shared->t;
    if (!(s >= t.front() && s <= t.back())) throw DomainError("interpolated: time " + std::to_string(s) + " outside the sample grid");
    const std::size_t last = t.size() - 2;
    std::size_t i;
    if (shared->uniform) {
      const double pos = std::floor((s - shared->origin) * shared->inv_step);
      i = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(last)));
      if (s < t[i] && i > 0) --i;
      if (s > t[i + 1] && i < last) ++i;
    } else {
      i = std::min(static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), s) - t.begin()) - 1, last);
    }
    if (s == t[i]) return shared->v[i];
    if (s == t[i + 1]) return shared->v[i + 1];
    const double w = (s - t[i]) / (t[i + 1] - t[i]);
    return shared->v[i] + w * (shared->v[i + 1] - shared->v[i]);
  };
}

RoughField constant_field(const Value& c, const Domain& domain) {
  const int d = domain.dim();
  const int m = static_cast<int>(c.size());
  HolderProfile p;
  return RoughField("constant", d, m, p, domain, [c](double, const Point&) { return c; })
      .with_jacobian([m, d](double, const Point&) { return Mat(Mat::Zero(m, d)); })
      .with_hessian([m, d](double, const Point&) {
        Hessian h;
        for (int i = 0; i < m; ++i) h.component[i] = Mat::Zero(d, d);
        return h;
      })
      .with_time_derivative([m](double, const Point&) { return Value(Value::Zero(m)); });
}

RoughField drift_field(const Vec& b, const Domain& domain) {
  const int d = domain.dim();
  if (b.size() != d) throw ArgumentError("drift_field: b has the wrong dimension");
  HolderProfile p;
  return RoughField("drift", d, d, p, domain, [b](double t, const Point&) { return Value(t * b); })
      .with_jacobian([d](double, const Point&) { return Mat(Mat::Zero(d, d)); })
      .with_hessian([d](double, const Point&) {
        Hessian h;
        for (int i = 0; i < d; ++i) h.component[i] = Mat::Zero(d, d);
        return h;
      })
      .with_time_derivative([b](double, const Point&) { return Value(b); });
}

namespace {

Hessian zero_hessian(int m, int d) {
  Hessian h;
  for (int i = 0; i < m; ++i) h.component[i] = Mat::Zero(d, d);
  return h;
}

}  // namespace

RoughField linear_field(TimeFn g, const Domain& domain, const HolderProfile& profile) {
  const int d = domain.dim();
  return RoughField("linear", d, d, profile, domain, [g](double t, const Point& x) { return Value(g(t) * x); })
      .with_jacobian([g, d](double t, const Point&) { return Mat(g(t) * Mat::Identity(d, d)); })
      .with_hessian([d](double, const Point&) { return zero_hessian(d, d); });
}

RoughField scalar_linear_field(TimeFn g, const Domain& domain, const HolderProfile& profile) {
  const int d = domain.dim();
  return RoughField("scalar_linear", d, 1, profile, domain,
                    [g](double t, const Point& x) { return scalar_value(g(t) * x.sum()); })
      .with_jacobian([g, d](double t, const Point&) { return Mat(Mat::Constant(1, d, g(t))); })
      .with_hessian([d](double, const Point&) { return zero_hessian(1, d); });
}

RoughField sine_field(TimeFn g, const Domain& domain, const HolderProfile& profile) {
  const int d = domain.dim();
  return RoughField("sine", d, d, profile, domain,
                    [g](double t, const Point& x) { return Value(g(t) * x.array().sin().matrix()); })
      .with_jacobian([g](double t, const Point& x) {
        return Mat(g(t) * x.array().cos().matrix().asDiagonal());
      })
      .with_hessian([g, d](double t, const Point& x) {
        Hessian h = zero_hessian(d, d);
        const double gt = g(t);
        for (int i = 0; i < d; ++i) h.component[i](i, i) = -gt * std::sin(x(i));
        return h;
      });
}

RoughField rotation_field(TimeFn g, const Domain& domain, const HolderProfile& profile) {
  if (domain.dim() != 2) throw ArgumentError("rotation_field: planar fields only");
  return RoughField("rotation", 2, 2, profile, domain,
                    [g](double t, const Point& x) { return Value(g(t) * make_vec({-x(1), x(0)})); })
      .with_jacobian([g](double t, const Point&) {
        Mat j(2, 2);
        j << 0.0, -g(t), g(t), 0.0;
        return j;
      })
      .with_hessian([](double, const Point&) { return zero_hessian(2, 2); });
}

RoughField separable_field(TimeFn g, SpatialFn h, const Domain& domain, const HolderProfile& profile,
                           TimeFn g_prime) {
  if (!h.value) throw ArgumentError("separable_field: missing spatial function");
  const int d = domain.dim();
  auto value = h.value;
  RoughField f("separable", d, 1, profile, domain,
               [g, value](double t, const Point& x) { return scalar_value(g(t) * value(x)); });
  if (h.gradient) {
    auto grad = h.gradient;
    f = f.with_jacobian([g, grad](double t, const Point& x) { return Mat(g(t) * grad(x).transpose()); });
  }
  if (h.hessian) {
    auto hess = h.hessian;
    f = f.with_hessian([g, hess](double t, const Point& x) {
      Hessian out;
      out.component[0] = g(t) * hess(x);
      return out;
    });
  }
  if (g_prime) {
    f = f.with_time_derivative([g_prime, value](double t, const Point& x) { return scalar_value(g_prime(t) * value(x)); });
  }
  return f;
}

RoughField separable_vector_field(TimeFn g, VectorFn v, const Domain& domain, const HolderProfile& profile) {
  if (!v.value) throw ArgumentError("separable_vector_field: missing spatial function");
  const int d = domain.dim();
  auto value = v.value;
  RoughField f("separable_vector", d, d, profile, domain,
               [g, value](double t, const Point& x) { return Value(g(t) * value(x)); });
  if (v.jacobian) {
    auto jac = v.jacobian;
    f = f.with_jacobian([g, jac](double t, const Point& x) { return Mat(g(t) * jac(x)); });
  }
  if (v.hessian) {
    auto hess = v.hessian;
    f = f.with_hessian([g, hess, d](double t, const Point& x) {
      Hessian h = hess(x);
      const double gt = g(t);
      for (int i = 0; i < d; ++i) h.component[i] *= gt;
      return h;
    });
  }
  return f;
}

}  // namespace rough::field
