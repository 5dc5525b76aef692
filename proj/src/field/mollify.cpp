#include "rough/field/mollify.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <utility>

#include <Eigen/Dense>

#include "rough/core/errors.hpp"
#include "rough/core/quadrature.hpp"

namespace rough::field {

namespace {

double unnormalised_bump(double r2) { return r2 < 1.0 ? std::exp(1.0 / (r2 - 1.0)) : 0.0; }

// |S^{n-1}| * int_0^1 r^{n-1} exp(1/(r^2-1)) dr, by composite Gauss-Legendre.
double radial_mass(int n) {
  const GaussLegendre& gl = gauss_legendre(64);
  const int panels = 64;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = static_cast<double>(p) / panels;
    const double half = 0.5 / panels;
    for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
      const double r = lo + half * (gl.nodes[k] + 1.0);
      total += half * gl.weights[k] * std::pow(r, n - 1) * unnormalised_bump(r * r);
    }
  }
  const double sphere = 2.0 * std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n);
  return sphere * total;
}

}  // namespace

double bump_constant(int n) {
  if (n < 1) throw ArgumentError("bump_constant: dimension must be >= 1");
  static std::mutex mutex;
  static std::map<int, double> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, 1.0 / radial_mass(n)).first;
  return it->second;
}

double bump(const Vec& z) {
  return bump_constant(static_cast<int>(z.size())) * unnormalised_bump(z.squaredNorm());
}

double bump_mass(int n, int nodes_per_axis) {
  if (nodes_per_axis < 1) throw ArgumentError("bump_mass: need >= 1 node per axis");
  const GaussLegendre& gl = gauss_legendre(nodes_per_axis);
  const double c = bump_constant(n);
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(nodes_per_axis);
  double mass = 0.0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    double r2 = 0.0, w = 1.0;
    for (int i = 0; i < n; ++i) {
      const std::size_t k = rest % nodes_per_axis;
      rest /= nodes_per_axis;
      r2 += gl.nodes[k] * gl.nodes[k];
      w *= gl.weights[k];
    }
    mass += w * c * unnormalised_bump(r2);
  }
  return mass;
}

namespace {

// Quadrature nodes z in the unit ball of R^{d+1} (coordinate 0 is time) with
// value, first-derivative and second-derivative weights.
struct Stencil {
  int d = 1;
  std::vector<Vec> z;
  std::vector<double> w;                 // mass
  std::vector<std::array<double, kMaxDim + 1>> g;  // d/dz_i, i = 0..d
  std::vector<Mat> h;                    // spatial d_i d_j, i,j = 1..d (stored 0-based)
};

Stencil build_stencil(int d, int nodes) {
  const int n = d + 1;
  const GaussLegendre& gl = gauss_legendre(nodes);
  Stencil s;
  s.d = d;
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(nodes);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    Vec z(n);
    double omega = 1.0;
    for (int i = 0; i < n; ++i) {
      const std::size_t k = rest % nodes;
      rest /= nodes;
      z(i) = gl.nodes[k];
      omega *= gl.weights[k];
    }
    const double r2 = z.squaredNorm();
    if (r2 >= 1.0) continue;
    const double q = r2 - 1.0;
    const double f = unnormalised_bump(r2);
    std::array<double, kMaxDim + 1> g{};
    for (int i = 0; i < n; ++i) g[i] = omega * f * (-2.0 * z(i) / (q * q));
    Mat h(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        const double zi = z(i + 1), zj = z(j + 1);
        h(i, j) = omega * f *
                  (4.0 * zi * zj / (q * q * q * q) + 8.0 * zi * zj / (q * q * q) -
                   (i == j ? 2.0 / (q * q) : 0.0));
      }
    }
    s.z.push_back(z);
    s.w.push_back(omega * f);
    s.g.push_back(g);
    s.h.push_back(h);
  }
  const std::size_t m = s.z.size();

  double mass = 0.0;
  for (double w : s.w) mass += w;
  for (double& w : s.w) w /= mass;

  // Moment conditions up to degree two are imposed exactly by a least-norm
  // correction in the metric of the bump weights, so polynomials of degree
  // <= 2 are differentiated without quadrature bias.
  std::vector<std::pair<int, int>> monos;  // (-1,-1) = 1, (a,-1) = z_a, (a,b) = z_a z_b
  monos.emplace_back(-1, -1);
  for (int a = 0; a < n; ++a) monos.emplace_back(a, -1);
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) monos.emplace_back(a, b);
  }
  const int p = static_cast<int>(monos.size());
  Eigen::MatrixXd P(m, p);
  for (std::size_t k = 0; k < m; ++k) {
    for (int c = 0; c < p; ++c) {
      const auto [a, b] = monos[c];
      P(k, c) = (a < 0 ? 1.0 : s.z[k](a)) * (b < 0 ? 1.0 : s.z[k](b));
    }
  }
  Eigen::MatrixXd WP = P;
  for (std::size_t k = 0; k < m; ++k) WP.row(k) *= s.w[k];
  const Eigen::LDLT<Eigen::MatrixXd> gram(P.transpose() * WP);
  auto impose = [&](auto get, const Eigen::VectorXd& target) {
    Eigen::VectorXd h(m);
    for (std::size_t k = 0; k < m; ++k) h(k) = get(k);
    const Eigen::VectorXd c = gram.solve(target - P.transpose() * h);
    h += WP * c;
    for (std::size_t k = 0; k < m; ++k) get(k) = h(k);
  };

  // Gradient weights reproduce d/dz_i: sum g^i (-z_a) = delta_ia, other moments zero.
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd target = Eigen::VectorXd::Zero(p);
    target(1 + i) = -1.0;
    impose([&](std::size_t k) -> double& { return s.g[k][i]; }, target);
  }
  // Hessian weights: sum h^{ij} z_a z_b equals the (i,j) derivative of z_a z_b.
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      Eigen::VectorXd target = Eigen::VectorXd::Zero(p);
      for (int c = 1 + n; c < p; ++c) {
        const auto [a, b] = monos[c];
        if ((a == i + 1 && b == j + 1) || (a == j + 1 && b == i + 1)) target(c) = a == b ? 2.0 : 1.0;
      }
      impose([&](std::size_t k) -> double& { return s.h[k](i, j); }, target);
    }
  }
  return s;
}

}  // namespace

RoughField mollify(const RoughField& field, double epsilon, MollifyOptions options) {
  if (!(epsilon > 0.0)) throw ArgumentError("mollify: epsilon must be positive");
  if (options.nodes_per_axis < 3) throw ArgumentError("mollify: need >= 3 quadrature nodes per axis");
  const int d = field.dim_in();
  const int m = field.dim_out();
  const Domain inner = field.domain().shrunk(epsilon);
  auto stencil = std::make_shared<const Stencil>(build_stencil(d, options.nodes_per_axis));
  const RoughField base = field;
  const double eps = epsilon;

  // W(t - eps z_0, x - eps z_{1..d}) over the stencil.
  auto gather = [base, stencil, eps, d](double t, const Point& x) {
    std::vector<Value> out;
    out.reserve(stencil->z.size());
    Point y(d);
    for (const Vec& z : stencil->z) {
      for (int i = 0; i < d; ++i) y(i) = x(i) - eps * z(i + 1);
      out.push_back(base.eval_unchecked(t - eps * z(0), y));
    }
    return out;
  };

  auto eval = [gather, stencil, m](double t, const Point& x) {
    const auto vals = gather(t, x);
    Value v = Value::Zero(m);
    for (std::size_t k = 0; k < vals.size(); ++k) v += stencil->w[k] * vals[k];
    return v;
  };
  auto jac = [gather, stencil, m, d, eps](double t, const Point& x) {
    const auto vals = gather(t, x);
    Mat j = Mat::Zero(m, d);
    for (std::size_t k = 0; k < vals.size(); ++k) {
      for (int i = 0; i < d; ++i) j.col(i) += stencil->g[k][i + 1] * vals[k];
    }
    return Mat(j / eps);
  };
  auto hess = [gather, stencil, m, d, eps](double t, const Point& x) {
    const auto vals = gather(t, x);
    Hessian h;
    for (int c = 0; c < m; ++c) h.component[c] = Mat::Zero(d, d);
    for (std::size_t k = 0; k < vals.size(); ++k) {
      for (int c = 0; c < m; ++c) h.component[c] += vals[k](c) * stencil->h[k];
    }
    for (int c = 0; c < m; ++c) h.component[c] /= eps * eps;
    return h;
  };
  auto dt = [gather, stencil, m, eps](double t, const Point& x) {
    const auto vals = gather(t, x);
    Value v = Value::Zero(m);
    for (std::size_t k = 0; k < vals.size(); ++k) v += stencil->g[k][0] * vals[k];
    return Value(v / eps);
  };

  return RoughField(field.name() + "*eta", d, m, field.profile(), inner, eval)
      .with_jacobian(jac)
      .with_hessian(hess)
      .with_time_derivative(dt);
}

}  // namespace rough::field
