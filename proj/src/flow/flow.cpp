#include "rough/flow/flow.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rough/core/errors.hpp"
#include "rough/core/parallel.hpp"
#include "rough/field/seminorm.hpp"
#include "rough/sewing/young.hpp"

namespace rough::flow {

namespace {

Mat jacobian_at(const RoughField& f, double t, const Point& x, double h) {
  if (f.has_jacobian()) return f.jacobian(t, x);
  return field::finite_difference_jacobian(f, t, x, h * (1.0 + x.norm()));
}

// component[i](j,k) = d_j d_k W^i
field::Hessian hessian_at(const RoughField& f, double t, const Point& x, double h) {
  if (f.has_hessian()) return f.hessian(t, x);
  const int d = f.dim_in();
  const double step = (f.has_jacobian() ? 1e-4 : 1e-3) * (1.0 + x.norm());
  field::Hessian out;
  for (int i = 0; i < f.dim_out(); ++i) out.component[i] = Mat::Zero(d, d);
  Point xp = x, xm = x;
  for (int k = 0; k < d; ++k) {
    xp(k) = x(k) + step;
    xm(k) = x(k) - step;
    const Mat diff = (jacobian_at(f, t, xp, h) - jacobian_at(f, t, xm, h)) / (2.0 * step);
    for (int i = 0; i < f.dim_out(); ++i) out.component[i].col(k) = diff.row(i).transpose();
    xp(k) = x(k);
    xm(k) = x(k);
  }
  return out;
}

Scheme resolve(Scheme s, const RoughField& f) {
  if (s == Scheme::automatic) return f.has_jacobian() ? Scheme::davie : Scheme::euler;
  return s;
}

void check_vector_field(const RoughField& f, const char* who) {
  if (!f.valid()) throw ArgumentError(std::string(who) + ": invalid field");
  if (f.dim_out() != f.dim_in()) throw ArgumentError(std::string(who) + ": the driver must be a vector field (dim_out = dim_in)");
}

}  // namespace

sewing::Path FlowSolution::as_path(double gamma) const {
  std::vector<double> t = times;
  std::vector<Point> x = states;
  if (t.front() > t.back()) {
    std::reverse(t.begin(), t.end());
    std::reverse(x.begin(), x.end());
  }
  return sewing::Path(std::move(t), std::move(x), gamma);
}

double FlowSolution::achieved_holder(double tau) const { return as_path(1.0).holder_norm(tau); }

double a_priori_sup_bound(double field_norm, double x0_norm, [[maybe_unused]] double T, double tau,
                          double lambda, const AprioriConstants& constants) {
  const double exponent = (1.0 - tau + tau * lambda) / (tau * lambda);
  return constants.C * std::exp(constants.kappa * std::pow(field_norm, exponent)) * std::max(1.0, x0_norm);
}

double estimate_field_norm(const RoughField& field, std::size_t n_times, std::size_t per_axis) {
  const auto& dom = field.domain();
  const auto grid = field::GridSpec::uniform(dom.t_lo, dom.t_hi, n_times, dom, per_axis);
  return field::estimate_seminorms(field, dom.t_lo, dom.t_hi, grid).total();
}

FlowSolution solve_rough_ode(const RoughField& field, const Point& x0, double t0, double T, std::size_t steps,
                             const FlowOptions& options) {
  check_vector_field(field, "solve_rough_ode");
  if (x0.size() != field.dim_in()) throw ArgumentError("solve_rough_ode: x0 has the wrong dimension");
  if (steps < 2) throw ArgumentError("solve_rough_ode: need >= 2 steps");
  const auto& p = field.profile();
  FlowSolution sol;
  if (!(p.tau * (1.0 + p.lambda) > 1.0)) {
    std::ostringstream os;
    os << "solve_rough_ode: tau(1+lambda) = " << p.tau * (1.0 + p.lambda) << " <= 1";
    if (options.strict) throw PreconditionError(os.str());
    sol.warnings.push_back(os.str());
  }
  if (p.beta + p.lambda > 1.0) sol.warnings.push_back("beta + lambda > 1: outside the existence theorem");

  sol.field_ref = field.name();
  sol.scheme = resolve(options.scheme, field);
  sol.field_norm = options.field_norm ? *options.field_norm : estimate_field_norm(field);
  const double span = std::fabs(T - t0);
  sol.a_priori_bound = a_priori_sup_bound(sol.field_norm, x0.norm(), span, p.tau, p.lambda, options.constants);

  if (options.step_cap_A && sol.field_norm > 0.0 && span > 0.0) {
    const double cap = std::pow(2.0 * *options.step_cap_A * sol.field_norm, -1.0 / (p.tau * p.lambda));
    const auto needed = static_cast<std::size_t>(std::ceil(span / cap));
    if (needed > steps) {
      sol.warnings.push_back("step count raised from " + std::to_string(steps) + " to " + std::to_string(needed) +
                             " by the step cap");
      steps = needed;
    }
  }
  sol.step_count = steps;
  sol.times.resize(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    sol.times[k] = t0 + (T - t0) * static_cast<double>(k) / static_cast<double>(steps);
  }
  sol.times.back() = T;

  const double limit = options.blowup_factor * sol.a_priori_bound;
  sol.states.reserve(steps + 1);
  sol.states.push_back(x0);
  Point x = x0;
  sol.achieved_sup = x.norm();
  for (std::size_t k = 0; k < steps; ++k) {
    const double ta = sol.times[k], tb = sol.times[k + 1];
    const Value D = field(tb, x) - field(ta, x);
    if (sol.scheme == Scheme::davie) {
      const Mat G = jacobian_at(field, tb, x, options.fd_step) - jacobian_at(field, ta, x, options.fd_step);
      x = x + D + 0.5 * (G * D);
    } else {
      x = x + D;
    }
    const double n = x.norm();
    if (!std::isfinite(n) || n > limit) {
      std::ostringstream os;
      os << "solve_rough_ode: |phi| = " << n << " exceeds " << options.blowup_factor
         << " x a-priori bound at t = " << tb;
      throw DivergenceError(os.str());
    }
    sol.achieved_sup = std::max(sol.achieved_sup, n);
    sol.states.push_back(x);
  }
  return sol;
}

double ode_residual(const RoughField& field, const FlowSolution& flow, const sewing::SewOptions& sew,
                    std::size_t checkpoints) {
  const sewing::Path path = flow.as_path(std::min(1.0, field.profile().tau));
  sewing::YoungOptions yo;
  yo.sew = sew;
  yo.strict = false;
  const double t0 = flow.times.front();
  const Point& x0 = flow.states.front();
  const std::size_t n = flow.times.size() - 1;
  double worst = 0.0;
  for (std::size_t c = 1; c <= checkpoints; ++c) {
    const std::size_t k = std::max<std::size_t>(1, n * c / checkpoints);
    const double t = flow.times[k];
    const double lo = std::min(t0, t), hi = std::max(t0, t);
    Value integral = sewing::nonlinear_young_integral(field, path, lo, hi, yo).value;
    if (t < t0) integral = -integral;
    worst = std::max(worst, (flow.states[k] - x0 - integral).norm());
  }
  return worst;
}

FlowMap flow_map(const RoughField& field, const std::vector<Point>& grid, double t0, double t, std::size_t steps,
                 const FlowOptions& options) {
  if (grid.empty()) throw ArgumentError("flow_map: empty grid");
  FlowOptions opts = options;
  if (!opts.field_norm) opts.field_norm = estimate_field_norm(field);
  FlowMap map;
  map.initial_points = grid;
  map.trajectories.resize(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    map.trajectories[i] = solve_rough_ode(field, grid[i], t0, t, steps, opts);
  });
  map.times = map.trajectories.front().times;
  const auto& dom = field.domain();
  const double diameter = (dom.x_hi - dom.x_lo).norm();
  map.min_final_distance = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = i + 1; j < grid.size(); ++j) {
      if ((grid[i] - grid[j]).norm() == 0.0) continue;
      const double dist = (map.trajectories[i].final_state() - map.trajectories[j].final_state()).norm();
      map.min_final_distance = std::min(map.min_final_distance, dist);
    }
  }
  map.injective = map.min_final_distance > 1e-8 * diameter;
  return map;
}

Point inverse_flow(const RoughField& field, const Point& x, double t0, double t, std::size_t steps,
                   const FlowOptions& options) {
  if (t == t0) return x;
  return solve_rough_ode(field, x, t, t0, steps, options).final_state();
}

JacobianPath jacobian_path(const RoughField& field, const FlowSolution& flow, const FlowOptions& options) {
  if (!field.has_jacobian()) throw CapabilityError("jacobian_path: field '" + field.name() + "' has no Jacobian");
  check_vector_field(field, "jacobian_path");
  const int d = field.dim_in();
  JacobianPath jp;
  jp.times = flow.times;
  const std::size_t n = flow.times.size();
  jp.matrices.reserve(n);
  jp.inverses.reserve(n);
  Eigen::MatrixXd G = Eigen::MatrixXd::Identity(d, d), M = G;
  double J = 1.0, div = 0.0;
  jp.matrices.emplace_back(G);
  jp.inverses.emplace_back(M);
  jp.dets.push_back(J);
  jp.exp_div.push_back(1.0);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double ta = flow.times[k], tb = flow.times[k + 1];
    const Point& x = flow.states[k];
    const Value D = field(tb, x) - field(ta, x);
    const Mat gradD = field.jacobian(tb, x) - field.jacobian(ta, x);
    const field::Hessian ha = hessian_at(field, ta, x, options.fd_step);
    const field::Hessian hb = hessian_at(field, tb, x, options.fd_step);
    Eigen::MatrixXd A(d, d);
    for (int i = 0; i < d; ++i) {
      const Eigen::VectorXd curvature = (hb.component[i] - ha.component[i]) * D;
      for (int j = 0; j < d; ++j) A(i, j) = gradD(i, j) + 0.5 * curvature(j);
    }
    const Eigen::MatrixXd E = A.exp();
    const Eigen::MatrixXd Einv = (-A).exp();
    G = E * G;
    M = M * Einv;
    const double tr = A.trace();
    J *= 1.0 + tr + 0.5 * tr * tr;
    div += tr;
    jp.matrices.emplace_back(G);
    jp.inverses.emplace_back(M);
    jp.dets.push_back(J);
    jp.exp_div.push_back(std::exp(div));
  }
  return jp;
}

LagrangianReport lagrangian_compressibility(const std::vector<JacobianPath>& backward, double t_span, double tau,
                                            std::optional<double> kappa) {
  if (backward.empty()) throw ArgumentError("lagrangian_compressibility: no samples");
  LagrangianReport r;
  for (const auto& jp : backward) r.L = std::max(r.L, std::fabs(jp.dets.back()));
  const double scale = std::pow(std::fabs(t_span), tau);
  r.kappa = scale > 0.0 ? std::max(0.0, std::log(r.L) / scale) : 0.0;
  r.bound = std::exp((kappa ? *kappa : r.kappa) * scale);
  return r;
}

ChainRuleReport chain_rule_residual(const RoughField& F, const sewing::Path& g, const RoughField& W,
                                    const FlowSolution& flow, double a, double b, const ChainRuleOptions& options) {
  if (F.dim_out() != 1) throw ArgumentError("chain_rule_residual: F must be scalar");
  if (F.dim_in() != W.dim_in()) throw ArgumentError("chain_rule_residual: F and W differ in dimension");
  if (g.dim() != 1) throw ArgumentError("chain_rule_residual: the weight g must be scalar");
  const auto& pf = F.profile();
  const double tau = W.profile().tau;
  const bool ok = pf.tau + pf.lambda * tau > 1.0 && g.gamma() + pf.tau > 1.0;
  if (!ok && options.strict) {
    throw PreconditionError("chain_rule_residual: need tau_F + lambda_F tau > 1 and tau_g + tau_F > 1");
  }
  const sewing::Path x = flow.as_path(std::min(1.0, tau));
  auto gs = [g](double s) { return g.at(s)(0); };

  sewing::Germ lhs, time, space;
  lhs.mu = [F, x, gs](double s, double t) { return Value(gs(s) * (F(t, x.at(t)) - F(s, x.at(s)))); };
  time.mu = [F, x, gs](double s, double t) {
    const Point xs = x.at(s);
    return Value(gs(s) * (F(t, xs) - F(s, xs)));
  };
  space.mu = [F, W, x, gs](double s, double t) {
    const Point xs = x.at(s);
    const Mat grad = F.has_jacobian() ? F.jacobian(s, xs) : field::finite_difference_jacobian(F, s, xs, 1e-6);
    return Value(gs(s) * (grad * (W(t, xs) - W(s, xs))));
  };
  // The residual is sewn from the combined germ so the three sums share every
  // partition and their first-order Riemann errors cancel before summation.
  sewing::Germ combined;
  combined.mu = [lhs, time, space](double s, double t) {
    return Value(lhs.mu(s, t) - time.mu(s, t) - space.mu(s, t));
  };
  ChainRuleReport r;
  r.lhs = sewing::sew(lhs, a, b, options.sew).value(0);
  r.rhs_time = sewing::sew(time, a, b, options.sew).value(0);
  r.rhs_space = sewing::sew(space, a, b, options.sew).value(0);
  r.residual = sewing::sew(combined, a, b, options.sew).value(0);
  return r;
}

namespace {

// Grid estimate of the seminorm of grad W over [lo,hi] x box:
// time-Hölder sup plus the rectangular sup.
double gradient_seminorm(const RoughField& field, double lo, double hi, const Vec& box_lo, const Vec& box_hi,
                         double fd_step) {
  const int d = field.dim_in();
  field::Domain cover;
  cover.t_lo = lo;
  cover.t_hi = hi;
  cover.x_lo = box_lo;
  cover.x_hi = box_hi;
  for (int k = 0; k < d; ++k) {
    if (cover.x_hi(k) - cover.x_lo(k) < 1e-9) {
      cover.x_lo(k) = std::max(cover.x_lo(k) - 0.5, field.domain().x_lo(k));
      cover.x_hi(k) = std::min(cover.x_hi(k) + 0.5, field.domain().x_hi(k));
    }
  }
  const auto grid = field::GridSpec::uniform(lo, hi, 17, cover, d == 1 ? 17 : 5);
  const std::size_t nt = grid.times.size(), nx = grid.points.size();
  std::vector<Mat> G(nt * nx);
  for (std::size_t i = 0; i < nt; ++i) {
    for (std::size_t j = 0; j < nx; ++j) G[i * nx + j] = jacobian_at(field, grid.times[i], grid.points[j], fd_step);
  }
  const auto& p = field.profile();
  double time_part = 0.0, rect_part = 0.0;
  for (std::size_t i = 0; i < nt; ++i) {
    for (std::size_t k = i + 1; k < nt; ++k) {
      const double dt = std::pow(grid.times[k] - grid.times[i], p.tau);
      for (std::size_t j = 0; j < nx; ++j) {
        const Mat dj = G[k * nx + j] - G[i * nx + j];
        time_part = std::max(time_part, dj.norm() / dt);
        for (std::size_t l = j + 1; l < nx; ++l) {
          const double dx = std::pow((grid.points[j] - grid.points[l]).norm(), p.lambda);
          rect_part = std::max(rect_part, (dj - G[k * nx + l] + G[i * nx + l]).norm() / (dt * dx));
        }
      }
    }
  }
  return time_part + rect_part;
}

}  // namespace

StabilityGap stability_gap(const RoughField& field, const Point& x0, const Point& y0, double t0, double T,
                           std::size_t steps, double kappa, const FlowOptions& options) {
  FlowOptions opts = options;
  if (!opts.field_norm) opts.field_norm = estimate_field_norm(field);
  const FlowSolution xs = solve_rough_ode(field, x0, t0, T, steps, opts);
  const FlowSolution ys = solve_rough_ode(field, y0, t0, T, steps, opts);
  StabilityGap r;
  Vec lo = x0.cwiseMin(y0), hi = x0.cwiseMax(y0);
  for (std::size_t k = 0; k < xs.states.size(); ++k) {
    r.gap = std::max(r.gap, (xs.states[k] - ys.states[k]).norm());
    lo = lo.cwiseMin(xs.states[k]).cwiseMin(ys.states[k]);
    hi = hi.cwiseMax(xs.states[k]).cwiseMax(ys.states[k]);
  }
  const auto& p = field.profile();
  const double span = std::fabs(T - t0);
  r.grad_norm = gradient_seminorm(field, std::min(t0, T), std::max(t0, T), lo, hi, options.fd_step);
  const double rho = std::pow(xs.achieved_holder(p.tau) + ys.achieved_holder(p.tau), p.lambda);
  r.A = kappa * r.grad_norm * (1.0 + rho * std::pow(span, p.lambda * p.tau));
  r.bound = std::pow(2.0, kappa * span * std::pow(r.A, 1.0 / p.tau)) * (x0 - y0).norm();
  r.holds = r.gap <= r.bound;
  return r;
}

}  // namespace rough::flow
