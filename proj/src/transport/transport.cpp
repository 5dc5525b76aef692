#include "rough/transport/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rough/core/errors.hpp"
#include "rough/core/parallel.hpp"

namespace rough::transport {

namespace {

flow::FlowOptions with_norm(const field::RoughField& W, flow::FlowOptions opts) {
  if (!opts.field_norm) opts.field_norm = flow::estimate_field_norm(W);
  return opts;
}

std::size_t scaled_steps(std::size_t steps, double part, double whole) {
  if (whole == 0.0) return 2;
  const double n = std::ceil(static_cast<double>(steps) * std::fabs(part / whole));
  return std::max<std::size_t>(2, static_cast<std::size_t>(n));
}

}  // namespace

void TransportProblem::validate() const {
  if (field.dim_in() != field.dim_out()) throw ArgumentError("transport: the driver must be a vector field");
  if (!field.has_jacobian()) throw CapabilityError("transport: field '" + field.name() + "' has no Jacobian");
  if (!h.value || !h.gradient) throw ArgumentError("transport: initial datum needs value and gradient");
  const double e = 1e-5;
  for (const Point& x : grid) {
    if (x.size() != field.dim_in()) throw ArgumentError("transport: grid point of the wrong dimension");
    const Vec g = h.gradient(x);
    for (int i = 0; i < x.size(); ++i) {
      Point xp = x, xm = x;
      xp(i) += e;
      xm(i) -= e;
      const double fd = (h.value(xp) - h.value(xm)) / (2 * e);
      if (std::fabs(fd - g(i)) > 1e-4 * (1.0 + std::fabs(g(i)))) {
        throw ArgumentError("transport: gradient of h disagrees with central differences");
      }
    }
  }
}

TransportSolution solve_transport(const TransportProblem& problem, double t, std::size_t steps,
                                  const flow::FlowOptions& options) {
  problem.validate();
  const flow::FlowOptions opts = with_norm(problem.field, options);
  TransportSolution sol;
  sol.t = t;
  sol.grid = problem.grid;
  const std::size_t n = problem.grid.size();
  sol.values.assign(n, std::numeric_limits<double>::quiet_NaN());
  sol.psi.assign(n, Point());
  sol.valid.assign(n, 0);
  parallel_for(n, [&](std::size_t i) {
    try {
      sol.psi[i] = flow::inverse_flow(problem.field, problem.grid[i], problem.t0, t, steps, opts);
      sol.values[i] = problem.h.value(sol.psi[i]);
      sol.valid[i] = 1;
    } catch (const DomainError&) {
      sol.psi[i] = Point::Constant(problem.grid[i].size(), std::numeric_limits<double>::quiet_NaN());
    }
  });
  sol.invalid_count = static_cast<std::size_t>(std::count(sol.valid.begin(), sol.valid.end(), 0));
  return sol;
}

double transport_value(const TransportProblem& problem, double t, const Point& x, std::size_t steps,
                       const flow::FlowOptions& options) {
  return problem.h.value(flow::inverse_flow(problem.field, x, problem.t0, t, steps, with_norm(problem.field, options)));
}

double characteristics_gap(const TransportProblem& problem, double t, std::size_t steps,
                           const flow::FlowOptions& options) {
  problem.validate();
  const flow::FlowOptions opts = with_norm(problem.field, options);
  const std::size_t n = problem.grid.size();
  std::vector<double> gap(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    try {
      const Point& x = problem.grid[i];
      const Point y = flow::solve_rough_ode(problem.field, x, problem.t0, t, steps, opts).final_state();
      gap[i] = std::fabs(transport_value(problem, t, y, steps, opts) - problem.h.value(x));
    } catch (const DomainError&) {
      gap[i] = 0.0;
    }
  });
  return *std::max_element(gap.begin(), gap.end());
}

ResidualReport transport_residual(const TransportProblem& problem, const Point& x, double t,
                                  const ResidualOptions& options) {
  problem.validate();
  const auto& W = problem.field;
  const int d = W.dim_in();
  const std::size_t m = options.time_cells;
  if (m < 2 || (m & (m - 1)) != 0) throw ArgumentError("transport_residual: time_cells must be a power of two >= 2");
  const auto& dom = W.domain();
  const double hx = options.hx > 0.0 ? options.hx : (dom.x_hi(0) - dom.x_lo(0)) / 256.0;
  if (!(hx > 0.0) || !std::isfinite(hx)) throw ArgumentError("transport_residual: bad difference spacing");
  for (int i = 0; i < d; ++i) {
    if (x(i) - hx < dom.x_lo(i) || x(i) + hx > dom.x_hi(i)) {
      throw ArgumentError("transport_residual: difference stencil leaves the field box");
    }
  }
  if (t == problem.t0) throw ArgumentError("transport_residual: empty time interval");
  const flow::FlowOptions fopts = with_norm(W, options.flow);

  // grad u at the time nodes by central differences of h(psi(s, .)).
  std::vector<double> nodes(m + 1);
  for (std::size_t k = 0; k <= m; ++k) nodes[k] = problem.t0 + (t - problem.t0) * static_cast<double>(k) / m;
  std::vector<Vec> grad(m + 1, Vec::Zero(d));
  parallel_for((m + 1) * static_cast<std::size_t>(d), [&](std::size_t job) {
    const std::size_t k = job / d;
    const int i = static_cast<int>(job % d);
    const std::size_t steps = scaled_steps(options.steps, nodes[k] - problem.t0, t - problem.t0);
    Point xp = x, xm = x;
    xp(i) += hx;
    xm(i) -= hx;
    const double up = problem.h.value(flow::inverse_flow(W, xp, problem.t0, nodes[k], steps, fopts));
    const double um = problem.h.value(flow::inverse_flow(W, xm, problem.t0, nodes[k], steps, fopts));
    grad[k](i) = (up - um) / (2 * hx);
  });

  const double a = std::min(problem.t0, t), b = std::max(problem.t0, t);
  auto grad_at = [&](double s) {
    // Node index along the [t0,t] orientation.
    double pos = (s - problem.t0) / (t - problem.t0) * static_cast<double>(m);
    pos = std::clamp(pos, 0.0, static_cast<double>(m));
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(pos), m - 1);
    const double w = pos - static_cast<double>(k);
    return Vec((1 - w) * grad[k] + w * grad[k + 1]);
  };
  sewing::Germ germ;
  germ.mu = [&](double s, double u) { return scalar_value(grad_at(s).dot(W(u, x) - W(s, x))); };
  germ.regularity = 2 * W.profile().tau - 1;
  sewing::SewOptions sopts = options.sew;
  sopts.max_levels = static_cast<int>(std::lround(std::log2(static_cast<double>(m))));
  sopts.min_levels = std::min(sopts.min_levels, sopts.max_levels);
  sopts.require_convergence = false;
  double integral = sewing::sew(germ, a, b, sopts).value(0);
  if (t < problem.t0) integral = -integral;

  ResidualReport r;
  r.hx = hx;
  r.time_cells = m;
  r.h = problem.h.value(x);
  r.u = transport_value(problem, t, x, options.steps, fopts);
  r.integral = integral;
  r.residual = r.u - r.h + integral;
  return r;
}

UniquenessReport uniqueness_probe(const TransportProblem& problem, double t, std::size_t base_steps,
                                  std::size_t refinements, const flow::FlowOptions& options) {
  if (base_steps < 2) throw ArgumentError("uniqueness_probe: base_steps must be >= 2");
  const flow::FlowOptions opts = with_norm(problem.field, options);
  UniquenessReport rep;
  TransportSolution prev = solve_transport(problem, t, base_steps, opts);
  std::size_t n = base_steps;
  for (std::size_t r = 0; r < refinements; ++r) {
    const TransportSolution next = solve_transport(problem, t, 2 * n, opts);
    double worst = 0.0;
    for (std::size_t i = 0; i < next.values.size(); ++i) {
      if (prev.valid[i] && next.valid[i]) worst = std::max(worst, std::fabs(next.values[i] - prev.values[i]));
    }
    rep.steps.push_back(n);
    rep.discrepancy.push_back(worst);
    prev = next;
    n *= 2;
  }
  rep.monotone = true;
  for (std::size_t i = 1; i < rep.discrepancy.size(); ++i) {
    const double a = rep.discrepancy[i - 1], b = rep.discrepancy[i];
    if (!(b < a || (a == 0.0 && b == 0.0))) rep.monotone = false;
  }
  return rep;
}

}  // namespace rough::transport
