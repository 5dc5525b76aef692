#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rough/core/errors.hpp"
#include "rough/core/stats.hpp"
#include "rough/field/library.hpp"
#include "rough/field/mollify.hpp"
#include "rough/gaussian/fbm.hpp"
#include "rough/sewing/sewing.hpp"
#include "rough/sewing/young.hpp"
#include "test_support.hpp"

using namespace rough;
using namespace rough::sewing;
using rough::test::profile;
using rough::test::scalar_field;
using rough::test::weierstrass;

namespace {

Germ scalar_germ(std::function<double(double, double)> f, double reg) {
  return Germ{[f](double s, double t) { return scalar_value(f(s, t)); }, reg, std::nullopt};
}

Path identity_path(std::size_t n) {
  std::vector<double> t(n + 1), v(n + 1);
  for (std::size_t i = 0; i <= n; ++i) t[i] = v[i] = static_cast<double>(i) / n;
  return Path::scalar(t, v, 1.0);
}

Path fbm(double H, std::size_t n, std::uint64_t seed, double gamma) {
  return Path::scalar(gaussian::uniform_times(n, 1.0), gaussian::fbm_path(H, n, 1.0, seed), gamma);
}

field::RoughField weierstrass_sine(double tau, double lo = -1.0, double hi = 2.0) {
  return scalar_field("wsin", 1, [tau](double t, const Point& x) { return weierstrass(tau, t) * std::sin(x(0)); },
                      field::Domain::cube(lo, hi, 1, -20, 20), profile(tau, 1));
}

}  // namespace

TEST(Partition, Validation) {
  EXPECT_THROW(Partition({0.0, 0.5, 0.5, 1.0}), ArgumentError);
  EXPECT_THROW(Partition({0.0}), ArgumentError);
  const Partition p({0.0, 0.1, 0.6, 1.0});
  EXPECT_DOUBLE_EQ(p.mesh(), 0.5);
  EXPECT_EQ(Partition::uniform(0, 1, 8).cells(), 8u);
}

TEST(RiemannSum, Examples) {
  const auto dt = scalar_germ([](double s, double t) { return t - s; }, 1.0);
  EXPECT_NEAR(riemann_sum(dt, Partition({0.0, 0.13, 0.5, 0.77, 1.0}))(0), 1.0, 1e-15);
  const auto add = scalar_germ([](double s, double t) { return std::exp(t) - std::exp(s); }, 1.0);
  EXPECT_NEAR(riemann_sum(add, Partition({0.0, 0.3, 1.0}))(0), std::exp(1.0) - 1.0, 1e-14);
  const auto young = scalar_germ([](double s, double t) { return s * (t - s); }, 1.0);
  for (std::size_t m : {1u, 2u, 7u, 64u}) {
    EXPECT_NEAR(riemann_sum(young, Partition::uniform(0, 1, m))(0), (m - 1.0) / (2.0 * m), 1e-14);
  }
}

TEST(Sew, Examples) {
  const auto add = scalar_germ([](double s, double t) { return std::sin(t) - std::sin(s); }, 1.0);
  const auto r0 = sew(add, 0.0, 1.0);
  EXPECT_NEAR(r0.value(0), std::sin(1.0), 1e-15);
  EXPECT_NEAR(r0.trace.front().value(0), std::sin(1.0), 1e-15);

  const auto young = scalar_germ([](double s, double t) { return s * (t - s); }, 1.0);
  // Level k misses 1/2 by 2^{-k-1}, twice the last successive difference.
  SewOptions opts;
  opts.tol = 1e-6;
  const auto r1 = sew(young, 0.0, 1.0, opts);
  EXPECT_TRUE(r1.converged);
  EXPECT_NEAR(r1.value(0), 0.5, 2 * opts.tol);

  const auto field = scalar_field("tx2", 1, [](double t, const Point& x) { return t * x(0) * x(0); },
                                  field::Domain::cube(0, 1, 1, -1, 2));
  const auto r2 = sew(young_germ(field, identity_path(1)), 0.0, 1.0, opts);
  EXPECT_NEAR(r2.value(0), 1.0 / 3.0, 2 * opts.tol);
}

TEST(Sew, NonConvergenceCarriesTrace) {
  const auto rough = scalar_germ([](double s, double t) { return std::sqrt(t - s); }, 0.5);
  SewOptions opts;
  opts.max_levels = 6;
  try {
    sew(rough, 0.0, 1.0, opts);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_EQ(e.trace().size(), 7u);
    EXPECT_EQ(e.trace().front().first, 1.0);
  }
  opts.require_convergence = false;
  const auto r = sew(rough, 0.0, 1.0, opts);
  EXPECT_FALSE(r.converged);
  EXPECT_FALSE(r.warnings.empty());
  EXPECT_THROW(sew(rough, 1.0, 0.0), ArgumentError);
}

TEST(Sew, EstimateWithKnownConstant) {
  // Defect (c-s)(t-c) <= |t-s|^2 / 4, so K = 1/4 and eps = 1.
  Germ g = scalar_germ([](double s, double t) { return s * (t - s); }, 1.0);
  g.defect_constant = 0.25;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SewOptions opts;
  opts.tol = 1e-7;
  opts.max_levels = 26;
  for (int i = 0; i < 20; ++i) {
    double s = u(rng), t = u(rng);
    if (s > t) std::swap(s, t);
    const auto r = sew(g, s, t, opts);
    ASSERT_TRUE(r.theoretical_bound.has_value());
    EXPECT_LE(std::fabs(r.value(0) - g.mu(s, t)(0)), *r.theoretical_bound + 2 * opts.tol);
  }
}

TEST(Sew, Linearity) {
  const Path phi = fbm(0.7, 1024, 8, 0.65);
  const auto W1 = weierstrass_sine(0.8);
  const auto W2 = scalar_field("w2", 1, [](double t, const Point& x) { return weierstrass(0.9, t + 0.3) * x(0) * x(0); },
                               field::Domain::cube(-1, 2, 1, -20, 20), profile(0.9, 1));
  const auto g1 = young_germ(W1, phi), g2 = young_germ(W2, phi);
  Germ sum{[g1, g2](double s, double t) { return Value(g1.mu(s, t) + g2.mu(s, t)); }, 0.45, std::nullopt};
  SewOptions opts;
  opts.tol = 1e-4;
  const double j1 = sew(g1, 0, 1, opts).value(0), j2 = sew(g2, 0, 1, opts).value(0);
  EXPECT_NEAR(sew(sum, 0, 1, opts).value(0), j1 + j2, 4 * opts.tol);
}

TEST(YoungIntegral, Examples) {
  YoungOptions opts;
  opts.sew.tol = 1e-6;
  const auto tx = scalar_field("tx", 1, [](double t, const Point& x) { return t * x(0); }, field::Domain::cube(0, 1, 1, -1, 2));
  EXPECT_NEAR(nonlinear_young_integral(tx, identity_path(1), 0, 1, opts).value(0), 0.5, 2 * opts.sew.tol);
  EXPECT_NEAR(right_endpoint_integral(tx, identity_path(1), 0, 1, opts).value(0), 0.5, 2 * opts.sew.tol);

  const auto W = weierstrass_sine(0.8);
  const Path c = Path::scalar({0.0, 1.0}, {0.7, 0.7}, 1.0);
  const double exact = W(0.9, make_vec({0.7}))(0) - W(0.1, make_vec({0.7}))(0);
  EXPECT_EQ(nonlinear_young_integral(W, c, 0.1, 0.9, opts).trace.front().value(0), exact);
  EXPECT_NEAR(nonlinear_young_integral(W, c, 0.1, 0.9, opts).value(0), exact, 1e-14);
  EXPECT_NEAR(right_endpoint_integral(W, c, 0.1, 0.9, opts).value(0), exact, 1e-14);
}

TEST(YoungIntegral, MatchesClassicalYoungByParts) {
  // W = g(t) x with rough g: the integral is int phi dg = phi g |_a^b - int g dphi,
  // and for piecewise linear phi the last term is sum slope_i int_cell g.
  const double tau = 0.8;
  const Path phi = fbm(0.75, 256, 21, 0.7);
  const auto W = field::scalar_linear_field([tau](double t) { return weierstrass(tau, t); },
                                            field::Domain::cube(-1, 2, 1, -20, 20), profile(tau, 1));
  YoungOptions opts;
  opts.sew.tol = 1e-4;
  const auto& ts = phi.times();
  const auto& vs = phi.values();
  double by_parts = vs.back()(0) * weierstrass(tau, 1.0) - vs.front()(0) * weierstrass(tau, 0.0);
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    const double slope = (vs[i + 1](0) - vs[i](0)) / (ts[i + 1] - ts[i]);
    by_parts -= slope * (test::weierstrass_antiderivative(tau, ts[i + 1]) - test::weierstrass_antiderivative(tau, ts[i]));
  }
  EXPECT_NEAR(nonlinear_young_integral(W, phi, 0, 1, opts).value(0), by_parts, 2 * opts.sew.tol);
}

TEST(YoungIntegral, StrictModeRejectsSubcriticalExponents) {
  const auto W = scalar_field("w", 1, [](double t, const Point& x) { return weierstrass(0.4, t) * x(0); },
                              field::Domain::cube(-1, 2, 1, -20, 20), profile(0.4, 1));
  const Path phi = fbm(0.5, 64, 1, 0.5);
  EXPECT_THROW(nonlinear_young_integral(W, phi, 0, 1), PreconditionError);
  YoungOptions lax;
  lax.strict = false;
  lax.sew.require_convergence = false;
  lax.sew.max_levels = 8;
  EXPECT_FALSE(nonlinear_young_integral(W, phi, 0, 1, lax).warnings.empty());
}

TEST(YoungIntegral, AdditivityOnRandomSplits) {
  const auto W = weierstrass_sine(0.8);
  const Path phi = fbm(0.7, 512, 4, 0.65);
  YoungOptions opts;
  opts.sew.tol = 1e-4;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    double p[3] = {u(rng), u(rng), u(rng)};
    std::sort(p, p + 3);
    const double whole = nonlinear_young_integral(W, phi, p[0], p[2], opts).value(0);
    const double left = nonlinear_young_integral(W, phi, p[0], p[1], opts).value(0);
    const double right = nonlinear_young_integral(W, phi, p[1], p[2], opts).value(0);
    EXPECT_NEAR(whole, left + right, 3 * opts.sew.tol) << p[0] << " " << p[1] << " " << p[2];
  }
}

TEST(YoungIntegral, LeftRightAgreement) {
  const auto W = weierstrass_sine(0.8);
  YoungOptions opts;
  opts.sew.tol = 1e-4;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Path phi = fbm(0.7, 512, seed, 0.65);
    const double l = nonlinear_young_integral(W, phi, 0, 1, opts).value(0);
    const double r = right_endpoint_integral(W, phi, 0, 1, opts).value(0);
    EXPECT_NEAR(l, r, 2 * opts.sew.tol);
  }
}

TEST(YoungIntegral, ConvergenceOrderAtLeastExponentGap) {
  // tau + lambda gamma - 1 = 0.8 + 0.7 - 1 = 0.5.
  const auto W = weierstrass_sine(0.8);
  YoungOptions opts;
  opts.sew.tol = 1e-300;
  opts.sew.max_levels = 12;
  opts.sew.require_convergence = false;
  std::vector<double> sq(13, 0.0);
  const int seeds = 8;
  for (int seed = 0; seed < seeds; ++seed) {
    const Path phi = fbm(0.7, 1 << 14, 100 + seed, 0.65);
    const auto r = nonlinear_young_integral(W, phi, 0, 1, opts);
    for (const auto& [level, diff] : successive_differences(r)) sq[static_cast<int>(level)] += diff * diff / seeds;
  }
  std::vector<double> level, rms;
  for (int k = 6; k <= 12; ++k) {
    level.push_back(k);
    rms.push_back(std::sqrt(sq[k]));
  }
  const auto fit = fit_decay_rate_log2(level, rms);
  EXPECT_GE(fit.slope, 0.5 - 0.05);
  EXPECT_GE(fit.r_squared, 0.9);
}

TEST(YoungIntegral, IndefiniteIntegralHolderBounded) {
  const auto W = weierstrass_sine(0.8);
  YoungOptions opts;
  opts.sew.tol = 1e-4;
  std::vector<double> norms;
  for (std::size_t n : {256u, 1024u, 4096u}) {
    const Path phi = fbm(0.7, n, 9, 0.65);
    std::vector<double> ts, is;
    for (int k = 0; k <= 32; ++k) {
      const double t = k / 32.0;
      ts.push_back(t);
      is.push_back(k == 0 ? 0.0 : nonlinear_young_integral(W, phi, 0, t, opts).value(0));
    }
    norms.push_back(holder_seminorm(ts, is, 0.8));
  }
  for (double n : norms) EXPECT_LT(n, 2.0 * norms.front() + 1.0);
}

TEST(SymmetricIntegral, Examples) {
  const auto drift = field::drift_field(make_vec({1.5}), field::Domain::cube(-1, 2, 1, -5, 5));
  const Path phi = fbm(0.7, 64, 2, 0.6);
  for (double eps : {0.5, 0.1, 0.01}) EXPECT_NEAR(symmetric_integral_approx(drift, phi, 0, 1, eps)(0), 1.5, 1e-13);
  const auto tx = scalar_field("tx", 1, [](double t, const Point& x) { return t * x(0); }, field::Domain::cube(-1, 2, 1, -1, 2));
  for (double eps : {0.25, 0.125}) EXPECT_NEAR(symmetric_integral_approx(tx, identity_path(64), 0, 1, eps)(0), 0.5, 1e-14);
  EXPECT_THROW(symmetric_integral_approx(tx, identity_path(8), 0, 1, 1.5), DomainError);
  EXPECT_THROW(symmetric_integral_approx(tx, identity_path(8), 0, 1, 0.0), ArgumentError);
}

TEST(SymmetricIntegral, ConvergesToYoungAtHolderRate) {
  const double tau = 0.8, theta = 0.5;
  const auto W = weierstrass_sine(tau);
  const Path phi = fbm(0.75, 1 << 12, 31, 0.7);
  YoungOptions opts;
  opts.sew.tol = 1e-5;
  const double young = nonlinear_young_integral(W, phi, 0, 1, opts).value(0);
  std::vector<double> level, err;
  for (int j = 3; j <= 9; ++j) {
    level.push_back(j);
    err.push_back(std::fabs(symmetric_integral_approx(W, phi, 0, 1, std::ldexp(1.0, -j))(0) - young));
  }
  EXPECT_GE(fit_decay_rate_log2(level, err).slope, tau * (1 - theta));
}

TEST(Stability, InW) {
  const auto W1 = weierstrass_sine(0.8);
  const Path phi = fbm(0.7, 512, 12, 0.65);
  StabilityOptions opts;
  opts.young.sew.tol = 1e-5;
  opts.young.sew.max_levels = 24;
  const auto same = integral_stability_in_W(W1, W1, phi, 0, 1, opts);
  EXPECT_EQ(same.observed_gap, 0.0);
  EXPECT_GE(same.bound, 0.0);
  EXPECT_TRUE(same.holds);

  const double delta = 0.37;
  const auto W2 = scalar_field("shift", 1, [W1, delta](double t, const Point& x) { return W1(t, x)(0) + delta * t; },
                               W1.domain(), W1.profile());
  const auto shifted = integral_stability_in_W(W1, W2, phi, 0.2, 0.9, opts);
  EXPECT_NEAR(shifted.observed_gap, delta * 0.7, 4 * opts.young.sew.tol);
  EXPECT_TRUE(shifted.holds);

  // Eight terms keep the finest oscillation resolvable by the mollifier's
  // quadrature at every tested eps.
  const auto W8 = scalar_field("w8", 1, [](double t, const Point& x) { return weierstrass(0.8, t, 8) * std::sin(x(0)); },
                               W1.domain(), W1.profile());
  double previous = INFINITY;
  for (int j = 2; j <= 6; ++j) {
    const auto Weps = field::mollify(W8, std::ldexp(1.0, -j));
    const auto r = integral_stability_in_W(W8, Weps, phi, 0, 1, opts);
    EXPECT_LT(r.observed_gap, previous) << "eps=2^-" << j;
    EXPECT_TRUE(r.holds);
    previous = r.observed_gap;
  }
}

TEST(Stability, InPhi) {
  const auto W = weierstrass_sine(0.8);
  const Path phi = fbm(0.7, 512, 13, 0.65);
  StabilityOptions opts;
  opts.young.sew.tol = 1e-5;
  EXPECT_EQ(integral_stability_in_phi(W, phi, phi, 0.5, 0, 1, opts).observed_gap, 0.0);

  const auto lin = field::scalar_linear_field([](double t) { return weierstrass(0.8, t); },
                                              field::Domain::cube(-1, 2, 1, -20, 20), profile(0.8, 1));
  const double h = 0.3;
  const auto r = integral_stability_in_phi(lin, phi, phi.shifted(make_vec({h})), 0.5, 0.1, 0.8, opts);
  EXPECT_NEAR(r.observed_gap, h * std::fabs(weierstrass(0.8, 0.8) - weierstrass(0.8, 0.1)), 4 * opts.young.sew.tol);
  EXPECT_TRUE(r.holds);

  std::vector<double> level, gap;
  for (int k = 2; k <= 8; ++k) {
    const auto rk = integral_stability_in_phi(W, phi, phi.shifted(make_vec({std::ldexp(1.0, -k)})), 0.5, 0, 1, opts);
    EXPECT_TRUE(rk.holds);
    level.push_back(k);
    gap.push_back(rk.observed_gap);
  }
  EXPECT_GE(fit_decay_rate_log2(level, gap).slope, 1.0 * (1 - 0.5));
}

TEST(Path, HolderNormAndValidation) {
  const Path p = Path::scalar({0.0, 0.25, 1.0}, {0.0, 0.5, 0.5}, 0.5);
  EXPECT_DOUBLE_EQ(p.holder_norm(), 1.0);
  EXPECT_DOUBLE_EQ(p.holder_norm(1.0), 2.0);
  EXPECT_DOUBLE_EQ(p.at(0.125)(0), 0.25);
  EXPECT_THROW(p.at(1.5), DomainError);
  EXPECT_THROW(Path::scalar({0.0, 0.0}, {1.0, 2.0}, 0.5), ArgumentError);
  EXPECT_THROW(Path::scalar({0.0, 1.0}, {1.0, 2.0}, 1.5), ArgumentError);
  const Path u = identity_path(100);
  EXPECT_NEAR(u.holder_norm(), 1.0, 1e-12);
}
