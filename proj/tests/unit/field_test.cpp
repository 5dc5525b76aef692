#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>

#include "rough/core/errors.hpp"
#include "rough/core/stats.hpp"
#include "rough/field/field.hpp"
#include "rough/field/grid_field.hpp"
#include "rough/field/library.hpp"
#include "rough/field/mollify.hpp"
#include "rough/field/seminorm.hpp"

using namespace rough;
using namespace rough::field;

namespace {

HolderProfile profile(double tau, double lambda, double beta = 0.0) {
  HolderProfile p;
  p.tau = tau;
  p.lambda = lambda;
  p.beta = beta;
  return p;
}

RoughField scalar_field(std::string name, int d, std::function<double(double, const Point&)> f,
                        Domain dom, HolderProfile p = profile(1, 1)) {
  return RoughField(std::move(name), d, 1, p, std::move(dom),
                    [f](double t, const Point& x) { return scalar_value(f(t, x)); });
}

}  // namespace

TEST(Field, EvalLinearExample) {
  auto W = scalar_linear_field([](double t) { return t * t; }, Domain::cube(0, 3, 2, -2, 2), profile(1, 1));
  EXPECT_EQ(eval_field(W, 2.0, make_vec({1, 1}))(0), 8.0);
}

TEST(Field, EvalIsPure) {
  auto W = sine_field([](double t) { return std::sqrt(t); }, Domain::cube(0, 1, 2, -3, 3), profile(0.5, 1));
  const Point x = make_vec({0.3, -1.7});
  const Value a = W(0.0, x), b = W(0.0, x);
  EXPECT_EQ(std::memcmp(a.data(), b.data(), sizeof(double) * 2), 0);
}

TEST(Field, OutOfDomainThrows) {
  auto W = drift_field(make_vec({1.0}), Domain::cube(0, 1, 1, -1, 1));
  EXPECT_THROW(W(1.5, make_vec({0.0})), DomainError);
  EXPECT_THROW(W(0.5, make_vec({2.0})), DomainError);
}

TEST(Field, ProfileValidation) {
  EXPECT_THROW(profile(0.0, 1).validate(), ArgumentError);
  EXPECT_THROW(profile(0.5, 1.5).validate(), ArgumentError);
  EXPECT_THROW(profile(0.5, 1, -1).validate(), ArgumentError);
  EXPECT_TRUE(profile(0.8, 1).young_condition(0.7));
  EXPECT_FALSE(profile(0.4, 1).young_condition(0.5));
}

TEST(Field, MissingCapabilities) {
  auto W = scalar_field("f", 1, [](double t, const Point& x) { return t * x(0); }, Domain::cube(0, 1, 1, -1, 1));
  EXPECT_THROW(W.jacobian(0.5, make_vec({0.0})), CapabilityError);
  EXPECT_THROW(W.hessian(0.5, make_vec({0.0})), CapabilityError);
  EXPECT_THROW(W.time_derivative(0.5, make_vec({0.0})), CapabilityError);
}

TEST(RectIncrement, Examples) {
  auto W1 = scalar_field("cube", 1, [](double, const Point& x) { return x(0) * x(0) * x(0); }, Domain::cube(0, 1, 1, -2, 2));
  EXPECT_DOUBLE_EQ(rect_increment(W1, 0.5, make_vec({0.5}), make_vec({1.5}))(0), 1.5 * 1.5 * 1.5 - 0.125);
  auto W2 = scalar_field("prod", 2, [](double, const Point& x) { return x(0) * x(1); }, Domain::cube(0, 1, 2, -2, 2));
  const Point x = make_vec({0.25, -1.0}), y = make_vec({1.5, 0.5});
  EXPECT_DOUBLE_EQ(rect_increment(W2, 0.0, x, y)(0), (1.5 - 0.25) * (0.5 + 1.0));
  EXPECT_EQ(rect_increment(W2, 0.0, x, x)(0), 0.0);
}

TEST(RectIncrement, MatchesNestedDifferencing) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int d = 1; d <= 3; ++d) {
    for (int trial = 0; trial < 20; ++trial) {
      const double a = u(rng), b = u(rng), c = u(rng);
      const bool separable = trial % 2 == 0;
      auto f = [=](double, const Point& p) {
        double v = 1.0;
        for (int i = 0; i < p.size(); ++i) v *= std::sin(a * (i + 1) * p(i) + b);
        return separable ? v : v + std::exp(c * p.sum()) * p.squaredNorm();
      };
      auto W = scalar_field("rand", d, f, Domain::cube(0, 1, d, -2, 2));
      Point x(d), y(d);
      for (int i = 0; i < d; ++i) {
        x(i) = u(rng);
        y(i) = u(rng);
      }
      // Nested differencing: apply (I - V_j) axis by axis as an operator on functions.
      std::function<double(const Point&)> g = [&](const Point& p) { return f(0.0, p); };
      for (int j = 0; j < d; ++j) {
        auto prev = g;
        g = [prev, j, &x](const Point& p) {
          Point q = p;
          q(j) = x(j);
          return prev(p) - prev(q);
        };
      }
      EXPECT_NEAR(rect_increment(W, 0.3, x, y)(0), g(y), 1e-12) << "d=" << d;
    }
  }
}

TEST(TimeSpaceIncrement, Examples) {
  auto sep = scalar_field("sep", 1, [](double t, const Point& x) { return std::cos(t) * x(0) * x(0); }, Domain::cube(0, 2, 1, -2, 2));
  const Point x = make_vec({0.5}), y = make_vec({-1.25});
  EXPECT_EQ(time_space_increment(sep, 0.7, 0.7, x, y)(0), 0.0);
  EXPECT_EQ(time_space_increment(sep, 0.2, 1.1, x, x)(0), 0.0);
  EXPECT_NEAR(time_space_increment(sep, 0.2, 1.1, x, y)(0),
              (std::cos(0.2) - std::cos(1.1)) * (0.25 - 1.5625), 1e-14);
  auto add = scalar_field("add", 1, [](double t, const Point& x) { return t + x(0); }, Domain::cube(0, 2, 1, -2, 2));
  EXPECT_EQ(time_space_increment(add, 0.2, 1.1, x, y)(0), 0.0);
}

TEST(Seminorms, ProductFieldExamples) {
  auto W = scalar_field("tx", 1, [](double t, const Point& x) { return t * x(0); }, Domain::cube(0, 1, 1, 0, 1));
  const auto grid = GridSpec::uniform(0, 1, 5, W.domain(), 5);
  const auto r = estimate_seminorms(W, 0, 1, grid);
  EXPECT_NEAR(r.rect_seminorm, 1.0, 1e-14);
  const auto r_half = estimate_seminorms(W, 0, 1, grid, profile(0.5, 1));
  EXPECT_NEAR(r_half.rect_seminorm, 1.0, 1e-14);
  EXPECT_EQ(r_half.rect_witness.t - r_half.rect_witness.s, 1.0);
}

TEST(Seminorms, ConstantFieldIsZero) {
  auto W = constant_field(scalar_value(3.5), Domain::cube(0, 1, 2, -1, 1));
  const auto r = estimate_seminorms(W, 0, 1, GridSpec::uniform(0, 1, 4, W.domain(), 4));
  EXPECT_EQ(r.rect_seminorm, 0.0);
  EXPECT_EQ(r.time_seminorm, 0.0);
  EXPECT_EQ(r.space_seminorm, 0.0);
}

TEST(Seminorms, DegenerateGridRejected) {
  auto W = drift_field(make_vec({1.0}), Domain::cube(0, 1, 1, -1, 1));
  GridSpec g;
  g.times = {0.5};
  g.points = {make_vec({0.0}), make_vec({0.5})};
  EXPECT_THROW(estimate_seminorms(W, 0, 1, g), ArgumentError);
}

TEST(Seminorms, MonotoneUnderRefinement) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const double a = 1 + 3 * u(rng), b = u(rng);
    for (int dim_out : {1, 2}) {
      RoughField W("rand", 1, dim_out, profile(0.6, 0.8, 0.2), Domain::cube(0, 1, 1, -2, 2),
                   [=](double t, const Point& x) {
                     Value v(dim_out);
                     v(0) = std::sin(a * t * x(0) + b) + std::sqrt(std::fabs(t - 0.3)) * x(0);
                     if (dim_out == 2) v(1) = std::cos(a * x(0)) * t;
                     return v;
                   });
      GridSpec g1 = GridSpec::uniform(0, 1, 5, W.domain(), 6);
      GridSpec g2 = g1;
      for (int k = 0; k < 4; ++k) {
        g2.times.push_back(u(rng));
        g2.points.push_back(make_vec({-2 + 4 * u(rng)}));
      }
      const auto r1 = estimate_seminorms(W, 0, 1, g1);
      const auto r2 = estimate_seminorms(W, 0, 1, g2);
      EXPECT_LE(r1.rect_seminorm, r2.rect_seminorm);
      EXPECT_LE(r1.time_seminorm, r2.time_seminorm);
      EXPECT_LE(r1.space_seminorm, r2.space_seminorm);
    }
  }
}

TEST(Mollify, BumpMassConverges) {
  for (int n : {2, 3}) EXPECT_NEAR(bump_mass(n, 48), 1.0, 1e-6) << "n=" << n;
  EXPECT_NEAR(bump_mass(1, 64), 1.0, 1e-8);
}

TEST(Mollify, ConstantAndAffineReproduced) {
  const Domain dom = Domain::cube(-1, 2, 2, -3, 3);
  auto c = mollify(constant_field(scalar_value(2.5), dom), 0.3);
  EXPECT_NEAR(c(0.5, make_vec({0.1, -0.4}))(0), 2.5, 1e-14);
  auto affine = scalar_field("x1", 2, [](double, const Point& x) { return x(0); }, dom);
  auto m = mollify(affine, 0.3);
  const Point x = make_vec({0.7, -0.2});
  EXPECT_NEAR(m(0.4, x)(0), 0.7, 1e-13);
  const Mat g = m.jacobian(0.4, x);
  EXPECT_NEAR(g(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(g(0, 1), 0.0, 1e-12);
  EXPECT_THROW(mollify(affine, 0.3, {2}), ArgumentError);
  EXPECT_THROW(mollify(affine, 0.0), ArgumentError);
  EXPECT_FALSE(m.domain().contains_time(-0.9));
}

TEST(Mollify, QuadraticHessianAndTimeDerivative) {
  const Domain dom = Domain::cube(-1, 2, 2, -3, 3);
  auto q = scalar_field("q", 2, [](double t, const Point& x) { return 3 * t + x(0) * x(0) + 2 * x(0) * x(1); }, dom);
  auto m = mollify(q, 0.25);
  const auto h = m.hessian(0.5, make_vec({0.3, 0.1}));
  EXPECT_NEAR(h.component[0](0, 0), 2.0, 1e-9);
  EXPECT_NEAR(h.component[0](0, 1), 2.0, 1e-9);
  EXPECT_NEAR(h.component[0](1, 1), 0.0, 1e-9);
  EXPECT_NEAR(m.time_derivative(0.5, make_vec({0.3, 0.1}))(0), 3.0, 1e-12);
}

TEST(Mollify, GradientErrorDecaysLikeHolderExponent) {
  // W = |x|^{1.5}: grad W is 1/2-Hölder, so sup |grad W_eps - grad W| ~ eps^{1/2}.
  auto W = scalar_field("pow", 1, [](double, const Point& x) { return std::pow(std::fabs(x(0)), 1.5); },
                        Domain::cube(-1, 2, 1, -2, 2))
               .with_jacobian([](double, const Point& x) {
                 Mat j(1, 1);
                 j(0, 0) = 1.5 * std::sqrt(std::fabs(x(0))) * (x(0) < 0 ? -1.0 : 1.0);
                 return j;
               });
  std::vector<double> level, err;
  for (int k = 3; k <= 7; ++k) {
    const double eps = std::ldexp(1.0, -k);
    auto m = mollify(W, eps);
    Domain box = Domain::cube(0.0, 0.5, 1, -1, 1);
    GridSpec g = GridSpec::uniform(0.0, 0.5, 2, box, 1025);
    level.push_back(k);
    err.push_back(estimate_gradient_difference(m, W, g, 1.0, 0.0).sup);
  }
  const auto fit = fit_decay_rate_log2(level, err);
  EXPECT_NEAR(fit.slope, 0.5, 0.05);
  EXPECT_GT(fit.r_squared, 0.99);
}

TEST(Field, GradientConsistencyFirstOrderOrBetter) {
  auto W = sine_field([](double t) { return 1 + t; }, Domain::cube(0, 1, 2, -3, 3), profile(1, 1));
  std::vector<double> level, err;
  for (int k = 3; k <= 8; ++k) {
    const double h = std::ldexp(1.0, -k);
    double worst = 0.0;
    for (double a : {-2.0, -0.5, 0.3, 1.9}) {
      const Point x = make_vec({a, 0.7 * a});
      worst = std::max(worst, (finite_difference_jacobian(W, 0.5, x, h) - W.jacobian(0.5, x)).norm());
    }
    level.push_back(k);
    err.push_back(worst);
  }
  EXPECT_GE(fit_decay_rate_log2(level, err).slope, 1.0);
}

TEST(GridField, NodeValuesAndInterpolation) {
  GridArray a;
  a.axes = {linspace(0, 1, 5), linspace(-1, 1, 9)};
  a.values.resize(a.size());
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 9; ++j) a.values[i * 9 + j] = std::sin(3.0 * a.axes[0][i] + a.axes[1][j]);
  }
  auto W = grid_field("grid", a, profile(0.5, 0.5));
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 9; ++j) EXPECT_EQ(W(a.axes[0][i], make_vec({a.axes[1][j]}))(0), a.values[i * 9 + j]);
  }
  // Bilinear between nodes: the midpoint of a cell is the mean of its corners.
  const double mid = W(0.125, make_vec({-0.875}))(0);
  EXPECT_NEAR(mid, 0.25 * (a.values[0] + a.values[1] + a.values[9] + a.values[10]), 1e-15);
  // A field linear in each variable is reproduced exactly.
  auto lin = tabulate(scalar_field("l", 1, [](double t, const Point& x) { return 2 * t - x(0) + t * x(0); },
                                   Domain::cube(0, 1, 1, -1, 1)),
                      a.axes);
  auto Wl = grid_field("lin", lin, profile(1, 1));
  EXPECT_NEAR(Wl(0.37, make_vec({0.11}))(0), 2 * 0.37 - 0.11 + 0.37 * 0.11, 1e-14);
}

TEST(GridField, CsvRoundTripIsLossless) {
  GridArray a;
  a.axes = {linspace(0, 1, 3), {-1.0, 0.1, 1.0 / 3.0}};
  a.values = {1.0 / 7.0, -2e-300, 3.0, M_PI, 0.0, -1e17, 5.5, 6.25, std::nextafter(1.0, 2.0)};
  const auto path = std::filesystem::temp_directory_path() / "rough_grid_roundtrip.csv";
  write_grid_csv(path.string(), a);
  const GridArray b = read_grid_csv(path.string());
  EXPECT_EQ(a.axes, b.axes);
  EXPECT_EQ(a.values, b.values);
  std::filesystem::remove(path);
}

TEST(GridField, RejectsBadArrays) {
  GridArray a;
  a.axes = {{0.0, 1.0}, {0.0, 0.0}};
  a.values = {1, 2, 3, 4};
  EXPECT_THROW(grid_field("bad", a, profile(1, 1)), ArgumentError);
  EXPECT_THROW(read_grid_csv("/nonexistent/grid.csv"), ArgumentError);
}
