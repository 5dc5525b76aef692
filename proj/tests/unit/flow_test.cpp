#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rough/core/errors.hpp"
#include "rough/core/stats.hpp"
#include "rough/field/library.hpp"
#include "rough/flow/flow.hpp"
#include "rough/gaussian/fbm.hpp"
#include "test_support.hpp"

using namespace rough;
using namespace rough::flow;
using rough::test::profile;

namespace {

constexpr std::size_t kDriverGrid = 4096;

/// Sampled fBm on [lo, lo + 1], interpolated.
field::TimeFn fbm_driver(double H, std::uint64_t seed, double scale = 1.0, double lo = 0.0) {
  auto times = gaussian::uniform_times(kDriverGrid, 1.0);
  for (double& t : times) t += lo;
  auto values = gaussian::fbm_path(H, kDriverGrid, 1.0, seed);
  for (double& v : values) v *= scale;
  return field::interpolated(times, values);
}

RoughField rough_sine(std::uint64_t seed, int d = 1) {
  return field::sine_field(fbm_driver(0.8, seed), field::Domain::cube(0, 1, d, -50, 50), profile(0.78, 1));
}

double dist(const Point& a, const Point& b) { return (a - b).norm(); }

}  // namespace

TEST(Flow, ConstantDriftIsExact) {
  const auto W = field::drift_field(make_vec({1.0, -2.0}), field::Domain::cube(-1, 2, 2, -10, 10));
  const Point x0 = make_vec({0.5, 0.25});
  const auto sol = solve_rough_ode(W, x0, 0.0, 1.5, 30);
  EXPECT_EQ(sol.step_count, 30u);
  for (std::size_t k = 0; k < sol.times.size(); ++k) {
    const Point want = x0 + (sol.times[k] - 0.0) * make_vec({1.0, -2.0});
    EXPECT_NEAR(dist(sol.states[k], want), 0.0, 1e-13);
  }
  const auto back = solve_rough_ode(W, x0, 1.0, -0.5, 10);
  EXPECT_NEAR(dist(back.final_state(), x0 - 1.5 * make_vec({1.0, -2.0})), 0.0, 1e-13);
  EXPECT_GT(back.times.front(), back.times.back());
}

TEST(Flow, LinearFieldMatchesExponential) {
  const auto g = fbm_driver(0.8, 1);
  const auto W = field::linear_field(g, field::Domain::cube(0, 1, 1, -50, 50), profile(0.78, 1));
  const Point x0 = make_vec({1.3});
  for (std::size_t steps : {64u, 256u, 1024u}) {
    const auto sol = solve_rough_ode(W, x0, 0.0, 1.0, steps);
    const double exact = 1.3 * std::exp(g(1.0) - g(0.0));
    EXPECT_LE(std::fabs(sol.final_state()(0) - exact), 5.0 / steps) << steps;
  }
}

TEST(Flow, SelfConvergenceForRoughDriver) {
  const double order = 0.78 * 2 - 1;
  std::vector<double> level, rms(6, 0.0);
  const int seeds = 4;
  for (int seed = 0; seed < seeds; ++seed) {
    const auto W = rough_sine(10 + seed);
    std::vector<double> finals;
    for (int j = 0; j < 7; ++j) finals.push_back(solve_rough_ode(W, make_vec({0.4}), 0, 1, 32u << j).final_state()(0));
    for (int j = 0; j < 6; ++j) rms[j] += std::pow(finals[j + 1] - finals[j], 2) / seeds;
  }
  std::vector<double> diffs;
  for (int j = 0; j < 6; ++j) {
    level.push_back(j);
    diffs.push_back(std::sqrt(rms[j]));
  }
  EXPECT_GE(fit_decay_rate_log2(level, diffs).slope, order);
  for (int j = 0; j + 1 < 6; ++j) EXPECT_LE(diffs[j + 1] / diffs[j], std::pow(2.0, -order) + 0.15) << j;
}

TEST(Flow, ResidualAgainstSewnIntegral) {
  const auto W = rough_sine(3);
  sewing::SewOptions sew;
  sew.tol = 1e-5;
  double previous = INFINITY;
  for (std::size_t steps : {128u, 512u, 2048u}) {
    const auto sol = solve_rough_ode(W, make_vec({0.4}), 0, 1, steps);
    const double r = ode_residual(W, sol, sew);
    EXPECT_LT(r, previous);
    previous = r;
  }
  EXPECT_LT(previous, 1e-3);
}

TEST(Flow, Errors) {
  const auto sub = field::sine_field(fbm_driver(0.4, 2), field::Domain::cube(0, 1, 1, -50, 50), profile(0.4, 0.5));
  EXPECT_THROW(solve_rough_ode(sub, make_vec({0.0}), 0, 1, 16), PreconditionError);
  FlowOptions lax;
  lax.strict = false;
  EXPECT_FALSE(solve_rough_ode(sub, make_vec({0.0}), 0, 1, 16, lax).warnings.empty());

  const auto drift = field::drift_field(make_vec({100.0}), field::Domain::cube(0, 1, 1, -1e3, 1e3));
  FlowOptions tight;
  tight.field_norm = 0.0;
  tight.blowup_factor = 1.0;
  EXPECT_THROW(solve_rough_ode(drift, make_vec({0.0}), 0, 1, 16, tight), DivergenceError);
  EXPECT_THROW(solve_rough_ode(drift, make_vec({0.0}), 0, 1, 1), ArgumentError);
}

TEST(AprioriBound, Examples) {
  EXPECT_DOUBLE_EQ(a_priori_sup_bound(0.0, 0.3, 1.0, 0.8, 1.0, {2.0, 1.0}), 2.0);
  EXPECT_DOUBLE_EQ(a_priori_sup_bound(0.0, 3.0, 1.0, 0.8, 1.0, {2.0, 1.0}), 6.0);
  EXPECT_DOUBLE_EQ(a_priori_sup_bound(1.7, 6.0, 1.0, 0.8, 0.9) / a_priori_sup_bound(1.7, 3.0, 1.0, 0.8, 0.9), 2.0);
}

TEST(AprioriBound, FitThenValidateOnLinearFamily) {
  // log(sup / (1 v |x0|)) = log C + kappa ||W||^p; fit on 10 instances, freeze, validate on 50.
  const double tau = 0.78, lambda = 1.0, p = (1 - tau + tau * lambda) / (tau * lambda);
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> scale(0.3, 1.5), start(-3, 3);
  struct Instance {
    double norm, x0, sup;
  };
  auto make = [&](std::uint64_t seed) {
    const double c = scale(rng), x0 = start(rng);
    const auto W = field::linear_field(fbm_driver(0.8, seed, c), field::Domain::cube(0, 1, 1, -1e3, 1e3), profile(tau, lambda));
    const auto sol = solve_rough_ode(W, make_vec({x0}), 0, 1, 256);
    return Instance{sol.field_norm, x0, sol.achieved_sup};
  };
  std::vector<double> xs, ys;
  std::vector<Instance> fit;
  for (int i = 0; i < 10; ++i) {
    fit.push_back(make(1000 + i));
    xs.push_back(std::pow(fit.back().norm, p));
    ys.push_back(std::log(fit.back().sup / std::max(1.0, std::fabs(fit.back().x0))));
  }
  const auto line = fit_line(xs, ys);
  AprioriConstants k;
  k.kappa = std::max(0.0, line.slope);
  double worst = -INFINITY;
  for (std::size_t i = 0; i < xs.size(); ++i) worst = std::max(worst, ys[i] - k.kappa * xs[i]);
  // Ten fitting instances underestimate the family's spread: the frozen C
  // carries a factor 2 margin.
  k.C = 2.0 * std::exp(worst);
  for (int i = 0; i < 50; ++i) {
    const auto inst = make(2000 + i);
    EXPECT_LE(inst.sup, a_priori_sup_bound(inst.norm, std::fabs(inst.x0), 1.0, tau, lambda, k)) << i;
  }
}

TEST(FlowMap, IdentityAndInjectivity) {
  const auto W = rough_sine(4);
  std::vector<Point> grid;
  for (int i = 0; i < 9; ++i) grid.push_back(make_vec({-2.0 + 0.5 * i}));
  const auto id = flow_map(W, grid, 0.3, 0.3, 4);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_EQ(id.trajectories[i].final_state()(0), grid[i](0));
  const auto m = flow_map(W, grid, 0.0, 1.0, 256);
  EXPECT_TRUE(m.injective);
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    EXPECT_LT(m.trajectories[i].final_state()(0), m.trajectories[i + 1].final_state()(0));
  }
}

TEST(FlowMap, CompositionOnRandomSplits) {
  const auto W = rough_sine(5, 2);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.05, 0.95), x(-2, 2);
  const std::size_t n = 1024;
  for (int trial = 0; trial < 20; ++trial) {
    const double s = u(rng);
    const Point x0 = make_vec({x(rng), x(rng)});
    const auto one = solve_rough_ode(W, x0, 0, 1, n);
    const auto one_half = solve_rough_ode(W, x0, 0, 1, n / 2);
    const double tol = dist(one.final_state(), one_half.final_state());
    const auto first = solve_rough_ode(W, x0, 0, s, std::max<std::size_t>(2, std::lround(s * n)));
    const auto second = solve_rough_ode(W, first.final_state(), s, 1, std::max<std::size_t>(2, std::lround((1 - s) * n)));
    EXPECT_LE(dist(one.final_state(), second.final_state()), 2 * tol + 1e-12) << "s=" << s;
  }
}

TEST(FlowMap, InverseRoundTrips) {
  const auto g = fbm_driver(0.8, 6);
  const auto lin = field::linear_field(g, field::Domain::cube(0, 1, 1, -50, 50), profile(0.78, 1));
  EXPECT_EQ(inverse_flow(lin, make_vec({0.7}), 0.4, 0.4, 8)(0), 0.7);
  const double forward = 0.7 * std::exp(g(1.0) - g(0.0));
  EXPECT_NEAR(inverse_flow(lin, make_vec({forward}), 0, 1, 1024)(0), 0.7, 5e-3);

  const auto W = rough_sine(7, 2);
  const Point x0 = make_vec({0.3, -1.1});
  const std::size_t n = 1024;
  const auto fwd = solve_rough_ode(W, x0, 0, 1, n);
  const double tol = dist(fwd.final_state(), solve_rough_ode(W, x0, 0, 1, n / 2).final_state());
  EXPECT_LE(dist(inverse_flow(W, fwd.final_state(), 0, 1, n), x0), 2 * tol);
}

TEST(FlowMap, JointHolderStableUnderRefinement) {
  const auto W = rough_sine(8);
  const double tau = 0.78;
  std::vector<Point> grid;
  for (int i = 0; i < 9; ++i) grid.push_back(make_vec({-1.0 + 0.25 * i}));
  std::vector<double> constants;
  for (std::size_t n : {128u, 512u, 2048u}) {
    const auto m = flow_map(W, grid, 0, 1, n);
    const std::size_t stride = n / 64;
    double c = 0.0;
    for (std::size_t a = 0; a <= 64; ++a) {
      for (std::size_t b = a + 1; b <= 64; ++b) {
        const double dt = std::pow((b - a) / 64.0, tau);
        for (std::size_t i = 0; i < grid.size(); ++i) {
          for (std::size_t j = i + 1; j < grid.size(); ++j) {
            const auto& P = m.trajectories[i].states;
            const auto& Q = m.trajectories[j].states;
            const double rect = std::fabs(P[a * stride](0) - Q[a * stride](0) - P[b * stride](0) + Q[b * stride](0));
            c = std::max(c, rect / (dt * dist(grid[i], grid[j])));
          }
        }
      }
    }
    constants.push_back(c);
  }
  const double hi = *std::max_element(constants.begin(), constants.end());
  const double lo = *std::min_element(constants.begin(), constants.end());
  EXPECT_LE(hi / lo, 2.0);
}

TEST(Jacobian, DriftAndLinearClosedForms) {
  const auto drift = field::drift_field(make_vec({1.0, 2.0}), field::Domain::cube(0, 1, 2, -10, 10));
  const auto jd = jacobian_path(drift, solve_rough_ode(drift, make_vec({0.0, 0.0}), 0, 1, 16));
  for (std::size_t k = 0; k < jd.times.size(); ++k) {
    EXPECT_EQ(jd.matrices[k], Mat::Identity(2, 2));
    EXPECT_EQ(jd.inverses[k], Mat::Identity(2, 2));
    EXPECT_EQ(jd.dets[k], 1.0);
  }

  const auto g = fbm_driver(0.8, 11);
  const auto lin = field::linear_field(g, field::Domain::cube(0, 1, 1, -50, 50), profile(0.78, 1));
  const auto sol = solve_rough_ode(lin, make_vec({0.5}), 0, 1, 512);
  const auto jp = jacobian_path(lin, sol);
  for (std::size_t k = 0; k < jp.times.size(); k += 37) {
    const double e = std::exp(g(jp.times[k]) - g(0.0));
    EXPECT_NEAR(jp.matrices[k](0, 0), e, 1e-12 * e);
    EXPECT_NEAR(jp.inverses[k](0, 0), 1 / e, 1e-12 / e);
    EXPECT_NEAR(jp.dets[k], e, 1e-3 * e);
  }

  const auto no_grad = test::scalar_field("s", 1, [](double t, const Point& x) { return t * x(0); },
                                          field::Domain::cube(0, 1, 1, -5, 5));
  EXPECT_THROW(jacobian_path(no_grad, solve_rough_ode(no_grad, make_vec({0.0}), 0, 1, 8)), CapabilityError);
}

TEST(Jacobian, InvariantsAlongRoughFlow) {
  const auto W = rough_sine(12, 2);
  const auto sol = solve_rough_ode(W, make_vec({0.4, -0.9}), 0, 1, 2048);
  const auto jp = jacobian_path(W, sol);
  for (std::size_t k = 0; k < jp.times.size(); ++k) {
    EXPECT_LE((jp.matrices[k] * jp.inverses[k] - Mat::Identity(2, 2)).norm(), 1e-6);
    const double det = jp.matrices[k].determinant();
    EXPECT_NEAR(det, jp.exp_div[k], 1e-9 * std::fabs(det));
    EXPECT_NEAR(jp.dets[k], jp.exp_div[k], 1e-3 * std::fabs(det));
  }
}

TEST(Jacobian, FiniteDifferenceCrossCheck) {
  const auto W = rough_sine(13, 2);
  const Point x0 = make_vec({0.2, 1.4});
  const double h = 1e-4;
  const std::size_t n = 2048;
  const auto base = solve_rough_ode(W, x0, 0, 1, n);
  const Mat G = jacobian_path(W, base).matrices.back();
  for (int i = 0; i < 2; ++i) {
    Point xh = x0;
    xh(i) += h;
    const Vec fd = (solve_rough_ode(W, xh, 0, 1, n).final_state() - base.final_state()) / h;
    EXPECT_LE((fd - G.col(i)).norm(), 1e-3 * std::max(1.0, G.norm())) << "column " << i;
  }
}

TEST(Lagrangian, ClosedForms) {
  const auto zero = field::drift_field(make_vec({1.0}), field::Domain::cube(-1, 1, 1, -10, 10));
  const auto jz = jacobian_path(zero, solve_rough_ode(zero, make_vec({0.5}), 0, -0.5, 16));
  EXPECT_DOUBLE_EQ(lagrangian_compressibility({jz}, 0.5, 0.8).L, 1.0);

  const auto rot = field::rotation_field(fbm_driver(0.8, 14, 1.0, -1.0), field::Domain::cube(-1, 0, 2, -50, 50), profile(0.78, 1));
  std::vector<JacobianPath> paths;
  for (double a : {-1.0, 0.0, 1.5}) paths.push_back(jacobian_path(rot, solve_rough_ode(rot, make_vec({a, 0.5}), 0, -1, 1024)));
  EXPECT_NEAR(lagrangian_compressibility(paths, 1.0, 0.78).L, 1.0, 1e-3);

  // Backward flow of dphi = phi dg: J(-t, x) = exp(g(-t) - g(0)).
  const auto g = fbm_driver(0.8, 15, 1.0, -1.0);
  const auto lin = field::linear_field(g, field::Domain::cube(-1, 0, 1, -50, 50), profile(0.78, 1));
  const auto jl = jacobian_path(lin, solve_rough_ode(lin, make_vec({0.3}), 0, -0.75, 1024));
  const auto rep = lagrangian_compressibility({jl}, 0.75, 0.78);
  EXPECT_NEAR(rep.L, std::exp(g(-0.75) - g(0.0)), 1e-3 * rep.L);
  EXPECT_LE(rep.L, rep.bound * (1 + 1e-12));
}

TEST(ChainRule, IdentityExamples) {
  const auto W = rough_sine(16);
  const auto sol = solve_rough_ode(W, make_vec({0.4}), 0, 1, 4096);
  const auto one = sewing::Path::scalar({0.0, 1.0}, {1.0, 1.0}, 1.0);
  ChainRuleOptions opts;
  opts.sew.tol = 1e-5;
  const auto Fx = field::scalar_linear_field([](double) { return 1.0; }, W.domain(), profile(1, 1));
  const auto rx = chain_rule_residual(Fx, one, W, sol, 0, 1, opts);
  EXPECT_NEAR(rx.lhs, sol.final_state()(0) - 0.4, 1e-12);
  EXPECT_LE(std::fabs(rx.residual), 1e-3);
  const auto Ft = test::scalar_field("t", 1, [](double t, const Point&) { return t; }, W.domain());
  const auto rt = chain_rule_residual(Ft, one, W, sol, 0.25, 1, opts);
  EXPECT_NEAR(rt.rhs_time, 0.75, 2 * opts.sew.tol);
  EXPECT_LE(std::fabs(rt.residual), 2 * opts.sew.tol);
}

TEST(ChainRule, QuadraticResidualDecays) {
  // F = x^2 with a state-independent smooth driver W = sin(3t): order >= min(2 tau, tau_F + lambda_F tau) - 1 = 1.
  const auto W = test::scalar_field("sin3t", 1, [](double t, const Point&) { return std::sin(3 * t); },
                                    field::Domain::cube(0, 1, 1, -10, 10))
                     .with_jacobian([](double, const Point&) { return Mat(Mat::Zero(1, 1)); });
  const auto F = test::scalar_field("x2", 1, [](double, const Point& x) { return x(0) * x(0); }, W.domain())
                     .with_jacobian([](double, const Point& x) {
                       Mat j(1, 1);
                       j(0, 0) = 2 * x(0);
                       return j;
                     });
  const auto g = sewing::Path::scalar({0.0, 0.5, 1.0}, {1.0, 0.5, 2.0}, 1.0);
  ChainRuleOptions opts;
  opts.sew.tol = 1e-5;
  opts.sew.max_levels = 22;
  std::vector<double> level, res;
  for (int j = 2; j <= 5; ++j) {
    const auto sol = solve_rough_ode(W, make_vec({0.5}), 0, 1, 1u << j);
    level.push_back(j);
    res.push_back(std::fabs(chain_rule_residual(F, g, W, sol, 0, 1, opts).residual));
    EXPECT_GT(res.back(), 10 * opts.sew.tol);
  }
  EXPECT_GE(fit_decay_rate_log2(level, res).slope, 1.0);
}

TEST(StabilityGap, LinearFieldClosedForm) {
  const auto g = fbm_driver(0.8, 17);
  const auto lin = field::linear_field(g, field::Domain::cube(0, 1, 1, -50, 50), profile(0.78, 1));
  const auto same = stability_gap(lin, make_vec({0.5}), make_vec({0.5}), 0, 1, 256);
  EXPECT_EQ(same.gap, 0.0);
  double sup_growth = 0.0;
  for (std::size_t k = 0; k <= kDriverGrid; ++k) sup_growth = std::max(sup_growth, std::exp(g(k / double(kDriverGrid)) - g(0.0)));
  std::vector<double> ratios;
  for (double h : {1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
    const auto r = stability_gap(lin, make_vec({0.5}), make_vec({0.5 + h}), 0, 1, 4096);
    EXPECT_NEAR(r.gap / h, sup_growth, 1e-3 * sup_growth);
    EXPECT_TRUE(r.holds);
    ratios.push_back(r.gap / h);
  }
  for (double q : ratios) EXPECT_NEAR(q, ratios.front(), 1e-9 * ratios.front());
}
