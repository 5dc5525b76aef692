#include "rough/sewing/young.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rough/core/errors.hpp"
#include "rough/core/quadrature.hpp"

namespace rough::sewing {

using field::RoughField;

namespace {

void check_dims(const RoughField& field, const Path& path, const char* who) {
  if (!field.valid()) throw ArgumentError(std::string(who) + ": invalid field");
  if (field.dim_in() != path.dim()) {
    throw ArgumentError(std::string(who) + ": path dimension does not match the field");
  }
}

// Returns a warning (empty if fine); throws in strict mode.
std::string check_young(const RoughField& field, double gamma, bool strict, const char* who) {
  const auto& p = field.profile();
  if (p.young_condition(gamma)) return {};
  std::ostringstream os;
  os << who << ": tau + lambda*gamma = " << p.tau + p.lambda * gamma << " <= 1 (tau=" << p.tau
     << ", lambda=" << p.lambda << ", gamma=" << gamma << ")";
  if (strict) throw PreconditionError(os.str());
  return os.str();
}

SewingResult integrate(const RoughField& field, const Path& path, double a, double b,
                       const YoungOptions& options, const Germ& germ, const char* who) {
  check_dims(field, path, who);
  if (!(a < b)) throw ArgumentError(std::string(who) + ": need a < b");
  if (a < path.t_begin() || b > path.t_end()) throw DomainError(std::string(who) + ": [a,b] exceeds the path grid");
  const std::string warning = check_young(field, path.gamma(), options.strict, who);
  SewingResult r = sew(germ, a, b, options.sew);
  if (!warning.empty()) r.warnings.push_back(warning);
  return r;
}

double regularity_of(const RoughField& field, const Path& path) {
  return field.profile().tau + field.profile().lambda * path.gamma() - 1.0;
}

}  // namespace

Germ young_germ(const RoughField& field, const Path& path) {
  Germ g;
  g.mu = [field, path](double s, double t) {
    const Point x = path.at(s);
    return Value(field(t, x) - field(s, x));
  };
  g.regularity = regularity_of(field, path);
  return g;
}

Germ right_endpoint_germ(const RoughField& field, const Path& path) {
  Germ g;
  g.mu = [field, path](double s, double t) {
    const Point x = path.at(t);
    return Value(field(t, x) - field(s, x));
  };
  g.regularity = regularity_of(field, path);
  return g;
}

SewingResult nonlinear_young_integral(const RoughField& field, const Path& path, double a, double b,
                                      const YoungOptions& options) {
  check_dims(field, path, "nonlinear_young_integral");
  return integrate(field, path, a, b, options, young_germ(field, path), "nonlinear_young_integral");
}

SewingResult right_endpoint_integral(const RoughField& field, const Path& path, double a, double b,
                                     const YoungOptions& options) {
  check_dims(field, path, "right_endpoint_integral");
  return integrate(field, path, a, b, options, right_endpoint_germ(field, path), "right_endpoint_integral");
}

Value symmetric_integral_approx(const RoughField& field, const Path& path, double a, double b,
                                double epsilon, const SymmetricOptions& options) {
  check_dims(field, path, "symmetric_integral_approx");
  if (!(epsilon > 0.0)) throw ArgumentError("symmetric_integral_approx: epsilon must be positive");
  if (!(a < b)) throw ArgumentError("symmetric_integral_approx: need a < b");
  if (options.nodes_per_cell < 1) throw ArgumentError("symmetric_integral_approx: need >= 1 node per cell");
  if (a - epsilon < field.domain().t_lo || b + epsilon > field.domain().t_hi) {
    throw DomainError("symmetric_integral_approx: field domain does not cover [a-eps, b+eps]");
  }
  if (a < path.t_begin() || b > path.t_end()) throw DomainError("symmetric_integral_approx: [a,b] exceeds the path grid");

  std::vector<double> cuts{a};
  for (double t : path.times()) {
    if (t > a && t < b) cuts.push_back(t);
  }
  cuts.push_back(b);
  const GaussLegendre& gl = gauss_legendre(options.nodes_per_cell);
  Value total = Value::Zero(field.dim_out());
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double mid = 0.5 * (cuts[c] + cuts[c + 1]);
    const double half = 0.5 * (cuts[c + 1] - cuts[c]);
    Value cell = Value::Zero(field.dim_out());
    for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
      const double s = mid + half * gl.nodes[k];
      const Point x = path.at(s);
      cell += gl.weights[k] * (field(s + epsilon, x) - field(s - epsilon, x));
    }
    total += half * cell;
  }
  return total / (2.0 * epsilon);
}

field::GridSpec covering_grid(const std::vector<const Path*>& paths, const field::Domain& box,
                              double a, double b, std::size_t n_times, std::size_t per_axis) {
  if (paths.empty()) throw ArgumentError("covering_grid: no paths");
  const int d = paths.front()->dim();
  Vec lo = Vec::Constant(d, std::numeric_limits<double>::infinity());
  Vec hi = -lo;
  for (const Path* p : paths) {
    for (const Point& x : p->values()) {
      lo = lo.cwiseMin(x);
      hi = hi.cwiseMax(x);
    }
  }
  for (int k = 0; k < d; ++k) {
    if (hi(k) - lo(k) < 1e-9) {
      lo(k) -= 0.5;
      hi(k) += 0.5;
    }
    lo(k) = std::max(lo(k), box.x_lo(k));
    hi(k) = std::min(hi(k), box.x_hi(k));
  }
  field::Domain cover;
  cover.t_lo = a;
  cover.t_hi = b;
  cover.x_lo = lo;
  cover.x_hi = hi;
  return field::GridSpec::uniform(a, b, n_times, cover, per_axis);
}

StabilityReport integral_stability_in_W(const RoughField& w1, const RoughField& w2, const Path& path,
                                        double a, double b, const StabilityOptions& options) {
  if (w1.dim_in() != w2.dim_in() || w1.dim_out() != w2.dim_out()) {
    throw ArgumentError("integral_stability_in_W: fields differ in shape");
  }
  const Value i1 = nonlinear_young_integral(w1, path, a, b, options.young).value;
  const Value i2 = nonlinear_young_integral(w2, path, a, b, options.young).value;
  StabilityReport r;
  r.observed_gap = (i1 - i2).norm();

  const RoughField diff("difference", w1.dim_in(), w1.dim_out(), w1.profile(), w1.domain(),
                        [w1, w2](double t, const Point& x) { return Value(w1(t, x) - w2(t, x)); });
  const auto grid = covering_grid({&path}, w1.domain(), a, b, options.seminorm_times,
                                  options.seminorm_points_per_axis);
  r.seminorm = field::estimate_seminorms(diff, a, b, grid).rect_seminorm;
  const auto& p = w1.profile();
  const Point xa = path.at(a);
  const double first = (w1(b, xa) - w1(a, xa) - w2(b, xa) + w2(a, xa)).norm();
  const double growth = 1.0 + std::pow(path.sup_norm(), p.beta);
  r.bound = first + options.constant * growth * r.seminorm * std::pow(path.holder_norm(), p.lambda) *
                        std::pow(b - a, p.tau + p.lambda * path.gamma());
  r.holds = r.observed_gap <= r.bound;
  return r;
}

StabilityReport integral_stability_in_phi(const RoughField& field, const Path& phi1, const Path& phi2,
                                          double theta, double a, double b,
                                          const StabilityOptions& options) {
  if (!(theta > 0.0 && theta < 1.0)) throw ArgumentError("integral_stability_in_phi: theta must lie in (0,1)");
  const auto& p = field.profile();
  const double gamma = std::min(phi1.gamma(), phi2.gamma());
  const double exponent = p.tau + theta * p.lambda * gamma;
  if (!(exponent > 1.0)) throw PreconditionError("integral_stability_in_phi: tau + theta*lambda*gamma must exceed 1");

  const Value i1 = nonlinear_young_integral(field, phi1, a, b, options.young).value;
  const Value i2 = nonlinear_young_integral(field, phi2, a, b, options.young).value;
  StabilityReport r;
  r.observed_gap = (i1 - i2).norm();

  const auto grid = covering_grid({&phi1, &phi2}, field.domain(), a, b, options.seminorm_times,
                                  options.seminorm_points_per_axis);
  r.seminorm = field::estimate_seminorms(field, a, b, grid).rect_seminorm;
  const double dist = phi1.minus(phi2).sup_norm();
  const double c1 = 1.0 + std::pow(phi1.sup_norm(), p.beta) + std::pow(phi2.sup_norm(), p.beta);
  const double c2 = std::pow(2.0, 1.0 - theta) * c1 *
                    std::pow(std::pow(phi1.holder_norm(gamma), p.lambda) + std::pow(phi2.holder_norm(gamma), p.lambda), theta);
  const double sewing_factor = 1.0 / (1.0 - std::pow(2.0, -(exponent - 1.0)));
  r.bound = options.constant * r.seminorm *
            (c1 * std::pow(dist, p.lambda) * std::pow(b - a, p.tau) +
             c2 * std::pow(dist, p.lambda * (1.0 - theta)) * std::pow(b - a, exponent) * sewing_factor);
  r.holds = r.observed_gap <= r.bound;
  return r;
}

}  // namespace rough::sewing
