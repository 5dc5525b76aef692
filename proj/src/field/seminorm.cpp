#include "rough/field/seminorm.hpp"

#include <cmath>

#include "rough/core/errors.hpp"
#include "rough/simd/kernels.hpp"

namespace rough::field {

GridSpec GridSpec::uniform(double a, double b, std::size_t n_times, const Domain& box,
                           std::size_t per_axis) {
  if (n_times < 2 || per_axis < 2) throw ArgumentError("GridSpec::uniform: need >= 2 points per axis");
  GridSpec g;
  for (std::size_t i = 0; i < n_times; ++i) {
    g.times.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(n_times - 1));
  }
  const int d = box.dim();
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) total *= per_axis;
  for (std::size_t flat = 0; flat < total; ++flat) {
    Point p(d);
    std::size_t rest = flat;
    for (int k = d - 1; k >= 0; --k) {
      const std::size_t idx = rest % per_axis;
      rest /= per_axis;
      p(k) = box.x_lo(k) + (box.x_hi(k) - box.x_lo(k)) * static_cast<double>(idx) /
                               static_cast<double>(per_axis - 1);
    }
    g.points.push_back(p);
  }
  return g;
}

namespace {

struct Sampled {
  std::size_t nt = 0, nx = 0;
  int dim_out = 1;
  // values[(i * nx + j) * dim_out + c]
  std::vector<double> values;
  double at(std::size_t i, std::size_t j, int c = 0) const { return values[(i * nx + j) * dim_out + c]; }
};

Sampled sample(const RoughField& field, const GridSpec& grid) {
  Sampled s;
  s.nt = grid.times.size();
  s.nx = grid.points.size();
  s.dim_out = field.dim_out();
  s.values.resize(s.nt * s.nx * s.dim_out);
  for (std::size_t i = 0; i < s.nt; ++i) {
    for (std::size_t j = 0; j < s.nx; ++j) {
      const Value v = field(grid.times[i], grid.points[j]);
      for (int c = 0; c < s.dim_out; ++c) s.values[(i * s.nx + j) * s.dim_out + c] = v(c);
    }
  }
  return s;
}

// Pairwise spatial weights 1 / ((1+|x|+|y|)^beta |x-y|^lambda); 0 on coincident points.
std::vector<double> space_weights(const GridSpec& grid, double beta, double lambda) {
  const std::size_t nx = grid.points.size();
  std::vector<double> w(nx * nx, 0.0);
  for (std::size_t j = 0; j < nx; ++j) {
    for (std::size_t l = 0; l < nx; ++l) {
      const double dist = (grid.points[j] - grid.points[l]).norm();
      if (dist == 0.0) continue;
      const double growth = 1.0 + grid.points[j].norm() + grid.points[l].norm();
      w[j * nx + l] = 1.0 / (std::pow(growth, beta) * std::pow(dist, lambda));
    }
  }
  return w;
}

double increment_norm(const Sampled& s, std::size_t i1, std::size_t j1, std::size_t i2,
                      std::size_t j2, std::size_t i3, std::size_t j3, std::size_t i4,
                      std::size_t j4) {
  // |V(i1,j1) - V(i2,j2) - V(i3,j3) + V(i4,j4)|
  double sq = 0.0;
  for (int c = 0; c < s.dim_out; ++c) {
    const double v = s.at(i1, j1, c) - s.at(i2, j2, c) - s.at(i3, j3, c) + s.at(i4, j4, c);
    sq += v * v;
  }
  return std::sqrt(sq);
}

}  // namespace

HolderReport estimate_seminorms(const RoughField& field, double a, double b, const GridSpec& grid) {
  return estimate_seminorms(field, a, b, grid, field.profile());
}

HolderReport estimate_seminorms(const RoughField& field, double a, double b, const GridSpec& grid,
                                const HolderProfile& exponents) {
  if (grid.times.size() < 2 || grid.points.size() < 2) {
    throw ArgumentError("estimate_seminorms: grid needs >= 2 times and >= 2 points");
  }
  for (double t : grid.times) {
    if (t < a || t > b) throw ArgumentError("estimate_seminorms: grid time outside [a,b]");
  }
  const double tau = exponents.tau, lambda = exponents.lambda, beta = exponents.beta;
  const Sampled s = sample(field, grid);
  const std::vector<double> wxy = space_weights(grid, beta, lambda);
  const std::size_t nt = s.nt, nx = s.nx;

  HolderReport report;
  report.grid = grid;
  auto witness = [&](std::size_t i, std::size_t k, std::size_t j, std::size_t l) {
    return Witness{grid.times[i], grid.times[k], grid.points[j], grid.points[l]};
  };

  // Per time-pair increments of the scalar case feed the SIMD kernel.
  std::vector<double> diff(nx);
  for (std::size_t i = 0; i < nt; ++i) {
    for (std::size_t k = i + 1; k < nt; ++k) {
      const double dt = std::fabs(grid.times[k] - grid.times[i]);
      if (dt == 0.0) continue;
      const double inv_dt = 1.0 / std::pow(dt, tau);
      if (s.dim_out == 1) {
        for (std::size_t j = 0; j < nx; ++j) diff[j] = s.at(k, j) - s.at(i, j);
        for (std::size_t j = 0; j < nx; ++j) {
          const auto best = simd::max_abs_diff_weighted(
              diff, diff[j], std::span<const double>(wxy.data() + j * nx, nx));
          const double r = best.value * inv_dt;
          if (r > report.rect_seminorm) {
            report.rect_seminorm = r;
            report.rect_witness = witness(i, k, j, best.index);
          }
        }
      } else {
        for (std::size_t j = 0; j < nx; ++j) {
          for (std::size_t l = j + 1; l < nx; ++l) {
            const double r = increment_norm(s, i, j, k, j, i, l, k, l) * wxy[j * nx + l] * inv_dt;
            if (r > report.rect_seminorm) {
              report.rect_seminorm = r;
              report.rect_witness = witness(i, k, j, l);
            }
          }
        }
      }
    }
  }

  std::vector<double> column(nt), tw(nt);
  for (std::size_t j = 0; j < nx; ++j) {
    const double growth = 1.0 / std::pow(1.0 + grid.points[j].norm(), beta + lambda);
    for (std::size_t i = 0; i < nt; ++i) column[i] = s.dim_out == 1 ? s.at(i, j) : 0.0;
    for (std::size_t i = 0; i + 1 < nt; ++i) {
      const std::size_t m = nt - i - 1;
      for (std::size_t k = 0; k < m; ++k) {
        const double dt = std::fabs(grid.times[i + 1 + k] - grid.times[i]);
        tw[k] = dt == 0.0 ? 0.0 : growth / std::pow(dt, tau);
      }
      if (s.dim_out == 1) {
        const auto best = simd::max_abs_diff_weighted(
            std::span<const double>(column.data() + i + 1, m), column[i],
            std::span<const double>(tw.data(), m));
        if (best.value > report.time_seminorm) {
          report.time_seminorm = best.value;
          report.time_witness = witness(i, i + 1 + best.index, j, j);
        }
      } else {
        for (std::size_t k = 0; k < m; ++k) {
          double sq = 0.0;
          for (int c = 0; c < s.dim_out; ++c) {
            const double v = s.at(i + 1 + k, j, c) - s.at(i, j, c);
            sq += v * v;
          }
          const double r = std::sqrt(sq) * tw[k];
          if (r > report.time_seminorm) {
            report.time_seminorm = r;
            report.time_witness = witness(i, i + 1 + k, j, j);
          }
        }
      }
    }
  }

  std::vector<double> row(nx);
  for (std::size_t i = 0; i < nt; ++i) {
    if (s.dim_out == 1) {
      for (std::size_t j = 0; j < nx; ++j) row[j] = s.at(i, j);
      for (std::size_t j = 0; j < nx; ++j) {
        const auto best = simd::max_abs_diff_weighted(
            row, row[j], std::span<const double>(wxy.data() + j * nx, nx));
        if (best.value > report.space_seminorm) {
          report.space_seminorm = best.value;
          report.space_witness = witness(i, i, j, best.index);
        }
      }
    } else {
      for (std::size_t j = 0; j < nx; ++j) {
        for (std::size_t l = j + 1; l < nx; ++l) {
          double sq = 0.0;
          for (int c = 0; c < s.dim_out; ++c) {
            const double v = s.at(i, l, c) - s.at(i, j, c);
            sq += v * v;
          }
          const double r = std::sqrt(sq) * wxy[j * nx + l];
          if (r > report.space_seminorm) {
            report.space_seminorm = r;
            report.space_witness = witness(i, i, j, l);
          }
        }
      }
    }
  }
  return report;
}

namespace {

Mat jacobian_or_fd(const RoughField& f, double t, const Point& x, double h) {
  return f.has_jacobian() ? f.jacobian(t, x) : finite_difference_jacobian(f, t, x, h);
}

GradientGrowthReport gradient_growth_impl(const std::function<Mat(double, const Point&)>& jac,
                                          const GridSpec& grid, double alpha, double beta) {
  GradientGrowthReport out;
  const std::size_t nx = grid.points.size();
  std::vector<Mat> g(nx);
  for (double t : grid.times) {
    for (std::size_t j = 0; j < nx; ++j) {
      g[j] = jac(t, grid.points[j]);
      const double xb = std::pow(grid.points[j].norm(), beta);
      out.sup = std::max(out.sup, g[j].norm() / (1.0 + xb));
    }
    for (std::size_t j = 0; j < nx; ++j) {
      for (std::size_t l = j + 1; l < nx; ++l) {
        const double dist = (grid.points[j] - grid.points[l]).norm();
        if (dist == 0.0) continue;
        const double denom = std::pow(dist, alpha) * (1.0 + std::pow(grid.points[j].norm(), beta) +
                                                      std::pow(grid.points[l].norm(), beta));
        out.holder = std::max(out.holder, (g[j] - g[l]).norm() / denom);
      }
    }
  }
  return out;
}

}  // namespace

GradientGrowthReport estimate_gradient_growth(const RoughField& field, const GridSpec& grid,
                                              double alpha, double beta, double fd_step) {
  return gradient_growth_impl(
      [&](double t, const Point& x) { return jacobian_or_fd(field, t, x, fd_step); }, grid, alpha,
      beta);
}

GradientGrowthReport estimate_gradient_difference(const RoughField& f, const RoughField& g,
                                                  const GridSpec& grid, double alpha, double beta,
                                                  double fd_step) {
  return gradient_growth_impl(
      [&](double t, const Point& x) {
        return Mat(jacobian_or_fd(f, t, x, fd_step) - jacobian_or_fd(g, t, x, fd_step));
      },
      grid, alpha, beta);
}

}  // namespace rough::field
