#include "rough/fk/fk.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "rough/core/errors.hpp"
#include "rough/core/parallel.hpp"
#include "rough/core/rng.hpp"
#include "rough/core/stats.hpp"
#include "rough/sewing/young.hpp"

namespace rough::fk {
namespace {

constexpr double kLogMax = 709.782712893384;  // log(DBL_MAX)

double scalar_w(const field::RoughField& field, double t, const Point& x) { return field(t, x)(0); }

void require_scalar(const field::RoughField& field, int d, const char* who) {
  if (!field.valid()) throw ArgumentError(std::string(who) + ": invalid field");
  if (field.dim_out() != 1) throw ArgumentError(std::string(who) + ": the potential field must be scalar");
  if (field.dim_in() != d) throw ArgumentError(std::string(who) + ": field dimension does not match the diffusion");
}

double l0(const DiffusionConfig& cfg, const field::RoughField& field, double t, const Point& x) {
  const Mat a = cfg.a(t, x);
  const Mat& h = field.hessian(t, x).component[0];
  return 0.5 * (a.array() * h.array()).sum();
}

// Riemann sum of the time-quadrature of L0 W along one driftless path.
double l0_integral(const DiffusionConfig& cfg, const field::RoughField& field, const DiffusionPath& path) {
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < path.times.size(); ++k)
    acc += l0(cfg, field, path.times[k], path.states[k]) * (path.times[k + 1] - path.times[k]);
  return acc;
}

struct VRun {
  double mean = 0.0;
  double std_error = 0.0;
};

VRun v_run(const field::RoughField& field, const DiffusionConfig& phi, double r, const Point& x, double T,
           const VOptions& o, bool parallel) {
  const double w = scalar_w(field, r, x);
  if (!(r < T)) return {-w, 0.0};
  MCConfig mc{o.inner_paths, o.inner_steps, o.seed, false};
  std::vector<double> samples(o.inner_paths);
  auto body = [&](std::size_t i) { samples[i] = l0_integral(phi, field, simulate_path(phi, r, x, T, mc, i)); };
  if (parallel) {
    parallel_for(samples.size(), body);
  } else {
    for (std::size_t i = 0; i < samples.size(); ++i) body(i);
  }
  const SampleMoments m = sample_moments(samples);
  return {-w - m.mean, m.std_error};
}

VEstimate v_estimate(const field::RoughField& field, const DiffusionConfig& cfg, double r, const Point& x, double T,
                     const VOptions& o, bool parallel) {
  if (!field.has_hessian()) throw CapabilityError("solve_v: the field has no second spatial derivatives");
  if (o.inner_paths < 2) throw ArgumentError("solve_v: need at least two inner paths");
  if (o.inner_steps < 1) throw ArgumentError("solve_v: need at least one inner step");
  if (!(o.fd_step > 0.0)) throw ArgumentError("solve_v: fd_step must be positive");
  const DiffusionConfig phi = cfg.driftless();
  const VRun centre = v_run(field, phi, r, x, T, o, parallel);
  VEstimate out;
  out.v = centre.mean;
  out.std_error = centre.std_error;
  out.gradient = Vec::Zero(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Point xp = x, xm = x;
    xp(i) += o.fd_step;
    xm(i) -= o.fd_step;
    out.gradient(i) = (v_run(field, phi, r, xp, T, o, parallel).mean - v_run(field, phi, r, xm, T, o, parallel).mean) /
                      (2.0 * o.fd_step);
  }
  return out;
}

void check_axis(const std::vector<double>& axis, const char* who) {
  if (axis.size() < 2) throw ArgumentError(std::string(who) + ": every axis needs at least two nodes");
  for (std::size_t i = 1; i < axis.size(); ++i)
    if (!(axis[i] > axis[i - 1])) throw ArgumentError(std::string(who) + ": axes must be strictly increasing");
}

// Cell index and weight of x on a sorted axis, clamped to the end cells.
std::pair<std::size_t, double> locate(const std::vector<double>& axis, double x) {
  auto it = std::upper_bound(axis.begin(), axis.end(), x);
  std::size_t i = it == axis.begin() ? 0 : static_cast<std::size_t>(it - axis.begin()) - 1;
  i = std::min(i, axis.size() - 2);
  const double w = (x - axis[i]) / (axis[i + 1] - axis[i]);
  return {i, std::clamp(w, 0.0, 1.0)};
}

// Multilinear interpolation on a tensor grid; `get(flat)` returns the node value.
template <class T, class Get>
T interpolate(const std::vector<std::vector<double>>& axes, const std::vector<double>& coords, Get get, T zero) {
  const std::size_t n = axes.size();
  std::vector<std::pair<std::size_t, double>> cell(n);
  for (std::size_t j = 0; j < n; ++j) cell[j] = locate(axes[j], coords[j]);
  T acc = zero;
  for (std::size_t corner = 0; corner < (std::size_t{1} << n); ++corner) {
    double weight = 1.0;
    std::size_t flat = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const bool up = (corner >> j) & 1u;
      weight *= up ? cell[j].second : 1.0 - cell[j].second;
      flat = flat * axes[j].size() + cell[j].first + (up ? 1 : 0);
    }
    if (weight != 0.0) acc += weight * get(flat);
  }
  return acc;
}

double log_sum_mean(const std::vector<double>& logs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double l : logs) m = std::max(m, l);
  if (!std::isfinite(m)) return m;
  std::vector<double> w(logs.size());
  for (std::size_t i = 0; i < logs.size(); ++i) w[i] = std::exp(logs[i] - m);
  return std::exp(m) * sample_moments(w).mean;
}

void thomas(std::vector<double>& lower, std::vector<double>& diag, std::vector<double>& upper,
            std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs(diag[i - 1]) < 1e-300) throw NumericalError("fd_reference_solve: singular tridiagonal system");
    const double m = lower[i] / diag[i - 1];
    diag[i] -= m * upper[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  if (std::abs(diag[n - 1]) < 1e-300) throw NumericalError("fd_reference_solve: singular tridiagonal system");
  rhs[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

}  // namespace

Mat sqrt_spd(const Mat& a) {
  if (a.rows() != a.cols() || a.rows() == 0) throw ArgumentError("sqrt_spd: need a non-empty square matrix");
  if (!a.allFinite()) throw NumericalError("sqrt_spd: matrix has non-finite entries");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) throw NumericalError("sqrt_spd: matrix is not symmetric");
  if (a.rows() == 1) {
    if (!(a(0, 0) > 0.0)) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "sqrt_spd: not positive definite (smallest eigenvalue %.6e)", a(0, 0));
      throw NumericalError(buf);
    }
    return Mat::Constant(1, 1, std::sqrt(a(0, 0)));
  }
  const Mat sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym);
  if (es.info() != Eigen::Success) throw NumericalError("sqrt_spd: eigen decomposition failed");
  const double smallest = es.eigenvalues().minCoeff();
  if (!(smallest > 0.0)) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "sqrt_spd: not positive definite (smallest eigenvalue %.6e)", smallest);
    throw NumericalError(buf);
  }
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

DiffusionConfig::DiffusionConfig(int d, MatrixCoefficient a, VectorCoefficient b, double lambda_min, double Lambda,
                                 double kappa_b, bool constant_a)
    : d_(d), a_(std::move(a)), b_(std::move(b)), lambda_min_(lambda_min), Lambda_(Lambda), kappa_b_(kappa_b) {
  if (d < 1 || d > kMaxDim) throw ArgumentError("DiffusionConfig: dimension out of range");
  if (!a_) throw ArgumentError("DiffusionConfig: missing diffusion matrix");
  if (!(lambda_min > 0.0) || !(Lambda >= lambda_min)) throw ArgumentError("DiffusionConfig: need 0 < lambda_min <= Lambda");
  if (!(kappa_b >= 0.0)) throw ArgumentError("DiffusionConfig: kappa_b must be non-negative");
  if (constant_a) constant_sigma_ = std::make_shared<const Mat>(sqrt_spd(a_(0.0, Point::Zero(d))));
}

DiffusionConfig DiffusionConfig::brownian(int d, double s) {
  const double s2 = s * s;
  return DiffusionConfig(
      d, [d, s2](double, const Point&) { return Mat(s2 * Mat::Identity(d, d)); }, nullptr, s2, s2, 0.0, true);
}

Vec DiffusionConfig::b(double t, const Point& x) const { return b_ ? b_(t, x) : Vec(Vec::Zero(d_)); }

Mat DiffusionConfig::sigma(double t, const Point& x) const {
  return constant_sigma_ ? *constant_sigma_ : sqrt_spd(a_(t, x));
}

DiffusionConfig DiffusionConfig::driftless() const {
  DiffusionConfig out = *this;
  out.b_ = nullptr;
  return out;
}

void DiffusionConfig::validate(std::uint64_t seed, std::size_t samples, double radius) const {
  UniformStream u(seed, 0);
  NormalStream g(seed, 1);
  auto point = [&] {
    Point x(d_);
    for (int i = 0; i < d_; ++i) x(i) = radius * (2.0 * u.next() - 1.0);
    return x;
  };
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = u.next();
    const Point x = point();
    const Mat a = a_(t, x);
    if (a.rows() != d_ || a.cols() != d_) throw ArgumentError("DiffusionConfig: a has the wrong shape");
    Vec xi(d_);
    for (int i = 0; i < d_; ++i) xi(i) = g.next();
    const double q = xi.dot(a * xi), n2 = xi.squaredNorm();
    const double slack = 1e-12 * (1.0 + n2 * Lambda_);
    if (q < lambda_min_ * n2 - slack || q > Lambda_ * n2 + slack) {
      std::ostringstream os;
      os << "DiffusionConfig: ellipticity bounds violated at t=" << t << " (quadratic form " << q / n2 << ")";
      throw ArgumentError(os.str());
    }
    const Mat s = sigma(t, x);
    if ((s * s.transpose() - a).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, a.cwiseAbs().maxCoeff()))
      throw ArgumentError("DiffusionConfig: sigma sigma^T differs from a");
    if (b_) {
      const Vec bx = b_(t, x);
      if (bx.size() != d_) throw ArgumentError("DiffusionConfig: b has the wrong dimension");
      if (bx.norm() > kappa_b_ * (1.0 + x.norm()) * (1.0 + 1e-12))
        throw ArgumentError("DiffusionConfig: b exceeds its linear-growth bound");
      const Point y = point();
      if ((b_(t, y) - bx).norm() > kappa_b_ * (y - x).norm() * (1.0 + 1e-12) + 1e-14)
        throw ArgumentError("DiffusionConfig: b exceeds its Lipschitz bound");
    }
  }
}

DiffusionPath simulate_path(const DiffusionConfig& cfg, double r, const Point& x, double T, const MCConfig& mc,
                            std::size_t index) {
  if (!(r < T)) throw ArgumentError("simulate_diffusion: need r < T");
  if (mc.n_steps < 1) throw ArgumentError("simulate_diffusion: need at least one step");
  if (x.size() != cfg.dim()) throw ArgumentError("simulate_diffusion: starting point has the wrong dimension");
  const std::size_t n = mc.n_steps;
  const double dt = (T - r) / static_cast<double>(n), sdt = std::sqrt(dt);
  const std::uint64_t stream = mc.antithetic ? index / 2 : index;
  const double sign = mc.antithetic && (index % 2 == 1) ? -1.0 : 1.0;
  NormalStream normal(mc.seed, stream);
  DiffusionPath p;
  p.times.resize(n + 1);
  p.states.resize(n + 1);
  p.increments.resize(n);
  p.states[0] = x;
  for (std::size_t k = 0; k <= n; ++k) p.times[k] = k == n ? T : r + static_cast<double>(k) * dt;
  const int d = cfg.dim();
  for (std::size_t k = 0; k < n; ++k) {
    Vec db(d);
    for (int i = 0; i < d; ++i) db(i) = sign * sdt * normal.next();
    const double t = p.times[k];
    const Point& xk = p.states[k];
    Point next = xk + cfg.sigma(t, xk) * db;
    if (cfg.has_drift()) next += cfg.b(t, xk) * (p.times[k + 1] - t);
    p.increments[k] = db;
    p.states[k + 1] = next;
  }
  return p;
}

std::vector<DiffusionPath> simulate_diffusion(const DiffusionConfig& cfg, double r, const Point& x, double T,
                                              const MCConfig& mc) {
  if (mc.n_paths < 1) throw ArgumentError("simulate_diffusion: need at least one path");
  std::vector<DiffusionPath> paths(mc.n_paths);
  parallel_for(paths.size(), [&](std::size_t i) { paths[i] = simulate_path(cfg, r, x, T, mc, i); });
  return paths;
}

double pathwise_w_integral(const field::RoughField& field, const DiffusionPath& path, const PathwiseOptions& options) {
  require_scalar(field, static_cast<int>(path.states.front().size()), "pathwise_w_integral");
  const double gamma = 0.5 - options.margin;
  if (!(gamma > 0.0)) throw ArgumentError("pathwise_w_integral: margin must be below 1/2");
  if (options.strict && !field.profile().young_condition(gamma)) {
    std::ostringstream os;
    os << "pathwise_w_integral: tau + lambda * " << gamma << " <= 1 for field " << field.name();
    throw PreconditionError(os.str());
  }
  const sewing::Path p(path.times, path.states, gamma);
  sewing::YoungOptions yo;
  yo.sew = options.sew;
  yo.strict = false;
  return sewing::nonlinear_young_integral(field, p, path.times.front(), path.times.back(), yo).value(0);
}

double path_grid_w_integral(const field::RoughField& field, const DiffusionPath& path) {
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < path.times.size(); ++k)
    acc += scalar_w(field, path.times[k + 1], path.states[k]) - scalar_w(field, path.times[k], path.states[k]);
  return acc;
}

VEstimate solve_v(const field::RoughField& field, const DiffusionConfig& cfg, double r, const Point& x, double T,
                  const VOptions& options) {
  require_scalar(field, cfg.dim(), "solve_v");
  return v_estimate(field, cfg, r, x, T, options, true);
}

struct VLattice::Data {
  std::vector<std::vector<double>> axes;  // time axis first
  std::vector<double> v;
  std::vector<Vec> grad;
  int d = 1;
};

VLattice::VLattice(const field::RoughField& field, const DiffusionConfig& cfg, double T, std::vector<double> times,
                   std::vector<std::vector<double>> axes, const VOptions& options) {
  require_scalar(field, cfg.dim(), "VLattice");
  if (!field.has_hessian()) throw CapabilityError("VLattice: the field has no second spatial derivatives");
  if (static_cast<int>(axes.size()) != cfg.dim()) throw ArgumentError("VLattice: need one axis per dimension");
  check_axis(times, "VLattice");
  for (const auto& a : axes) check_axis(a, "VLattice");
  if (times.back() > T) throw ArgumentError("VLattice: lattice times exceed T");
  auto data = std::make_shared<Data>();
  data->d = cfg.dim();
  data->axes.push_back(std::move(times));
  for (auto& a : axes) data->axes.push_back(std::move(a));
  std::size_t total = 1;
  for (const auto& a : data->axes) total *= a.size();
  data->v.resize(total);
  data->grad.resize(total);
  parallel_for(total, [&](std::size_t flat) {
    std::size_t rem = flat;
    std::vector<std::size_t> idx(data->axes.size());
    for (std::size_t j = data->axes.size(); j-- > 0;) {
      idx[j] = rem % data->axes[j].size();
      rem /= data->axes[j].size();
    }
    Point x(data->d);
    for (int i = 0; i < data->d; ++i) x(i) = data->axes[i + 1][idx[i + 1]];
    const VEstimate e = v_estimate(field, cfg, data->axes[0][idx[0]], x, T, options, false);
    data->v[flat] = e.v;
    data->grad[flat] = e.gradient;
  });
  data_ = std::move(data);
}

bool VLattice::covers(double t, const Point& x) const {
  const auto& ax = data_->axes;
  if (x.size() != data_->d) return false;
  auto inside = [](const std::vector<double>& a, double v) {
    const double slack = 1e-12 * (1.0 + std::abs(a.back()) + std::abs(a.front()));
    return v >= a.front() - slack && v <= a.back() + slack;
  };
  if (!inside(ax[0], t)) return false;
  for (int i = 0; i < data_->d; ++i)
    if (!inside(ax[i + 1], x(i))) return false;
  return true;
}

double VLattice::value(double t, const Point& x) const {
  if (!covers(t, x)) throw ArgumentError("VLattice: query outside the lattice");
  std::vector<double> c{t};
  for (int i = 0; i < data_->d; ++i) c.push_back(x(i));
  return interpolate<double>(data_->axes, c, [&](std::size_t f) { return data_->v[f]; }, 0.0);
}

Vec VLattice::gradient(double t, const Point& x) const {
  if (!covers(t, x)) throw ArgumentError("VLattice: query outside the lattice");
  std::vector<double> c{t};
  for (int i = 0; i < data_->d; ++i) c.push_back(x(i));
  return interpolate<Vec>(data_->axes, c, [&](std::size_t f) { return data_->grad[f]; }, Vec(Vec::Zero(data_->d)));
}

VFunction VLattice::as_function() const {
  VLattice self = *this;
  return {[self](double t, const Point& x) { return self.value(t, x); },
          [self](double t, const Point& x) { return self.gradient(t, x); }};
}

ItoTerms ito_trick_integral(const DiffusionConfig& cfg, const DiffusionPath& path, const VFunction& v) {
  if (!v.value || !v.gradient) throw ArgumentError("ito_trick_integral: v and grad v are required");
  if (path.states.size() < 2 || path.increments.size() + 1 != path.states.size())
    throw ArgumentError("ito_trick_integral: malformed path");
  ItoTerms out;
  const std::size_t n = path.increments.size();
  out.v_start = v.value(path.times.front(), path.states.front());
  out.v_end = v.value(path.times.back(), path.states.back());
  for (std::size_t k = 0; k < n; ++k) {
    const double t = path.times[k];
    const Point& x = path.states[k];
    const Vec g = v.gradient(t, x);
    if (cfg.has_drift()) out.drift += cfg.b(t, x).dot(g) * (path.times[k + 1] - t);
    out.stochastic += g.dot(cfg.sigma(t, x) * path.increments[k]);
  }
  out.value = out.v_start - out.v_end + out.drift + out.stochastic;
  return out;
}

namespace {

FKSolution fk_core(const field::RoughField* field, const DiffusionConfig& cfg, const ScalarFn& u_T,
                   const std::vector<FKPoint>& points, double T, const MCConfig& mc, const FKOptions& options) {
  if (!u_T) throw ArgumentError("feynman_kac_solve: missing terminal function");
  if (mc.n_paths < 2) throw ArgumentError("feynman_kac_solve: need at least two paths");
  if (field) require_scalar(*field, cfg.dim(), "feynman_kac_solve");
  if (field && options.route == Route::ito_trick && !options.v)
    throw ArgumentError("feynman_kac_solve: the Ito-trick route needs v");
  FKSolution sol;
  sol.points = points;
  for (const FKPoint& pt : points) {
    std::vector<double> integral(mc.n_paths, 0.0), terminal(mc.n_paths);
    parallel_for(mc.n_paths, [&](std::size_t i) {
      const DiffusionPath path = simulate_path(cfg, pt.r, pt.x, T, mc, i);
      terminal[i] = u_T(path.states.back());
      if (!field) return;
      if (options.route == Route::ito_trick)
        integral[i] = ito_trick_integral(cfg, path, *options.v).value;
      else if (options.sewn)
        integral[i] = pathwise_w_integral(*field, path, options.pathwise);
      else
        integral[i] = path_grid_w_integral(*field, path);
    });
    FKDiagnostics diag;
    if (!field) {
      const SampleMoments m = sample_moments(terminal);
      sol.u.push_back(m.mean);
      sol.std_error.push_back(m.std_error);
      sol.diagnostics.push_back(diag);
      continue;
    }
    std::size_t overflow = 0;
    double top = -std::numeric_limits<double>::infinity();
    for (double l : integral) {
      if (!(l <= kLogMax)) ++overflow;  // also counts NaN
      if (std::isfinite(l)) top = std::max(top, l);
    }
    if (!std::isfinite(top)) top = 0.0;
    std::vector<double> weighted(mc.n_paths);
    for (std::size_t i = 0; i < mc.n_paths; ++i) weighted[i] = terminal[i] * std::exp(integral[i] - top);
    const SampleMoments m = sample_moments(weighted);
    const double scale = std::exp(top);
    sol.u.push_back(m.mean * scale);
    sol.std_error.push_back(m.std_error * scale);
    diag.overflow_fraction = static_cast<double>(overflow) / static_cast<double>(mc.n_paths);
    diag.max_log_weight = top;
    diag.mean_integral = sample_moments(integral).mean;
    if (diag.overflow_fraction > options.overflow_threshold || !std::isfinite(sol.u.back())) {
      diag.unstable = true;
      std::ostringstream os;
      os << "exponential weight overflow on " << overflow << " of " << mc.n_paths << " paths";
      diag.warning = os.str();
    }
    sol.diagnostics.push_back(diag);
  }
  return sol;
}

}  // namespace

FKSolution feynman_kac_solve(const field::RoughField& field, const DiffusionConfig& cfg, const ScalarFn& u_T,
                             const std::vector<FKPoint>& points, double T, const MCConfig& mc,
                             const FKOptions& options) {
  return fk_core(&field, cfg, u_T, points, T, mc, options);
}

FKSolution expected_terminal(const DiffusionConfig& cfg, const ScalarFn& u_T, const std::vector<FKPoint>& points,
                             double T, const MCConfig& mc) {
  return fk_core(nullptr, cfg, u_T, points, T, mc, {});
}

double FDSolution::at(const Point& x) const {
  if (static_cast<std::size_t>(x.size()) != axes.size()) throw ArgumentError("FDSolution::at: wrong dimension");
  std::vector<double> c(axes.size());
  for (std::size_t j = 0; j < axes.size(); ++j) {
    if (x(j) < axes[j].front() || x(j) > axes[j].back()) throw DomainError("FDSolution::at: point outside the grid");
    c[j] = x(j);
  }
  return interpolate<double>(axes, c, [&](std::size_t f) { return values[f]; }, 0.0);
}

FDSolution fd_reference_solve(const field::RoughField& field, const DiffusionConfig& cfg, const ScalarFn& u_T, double T,
                              const FDGrid& grid) {
  const int d = cfg.dim();
  require_scalar(field, d, "fd_reference_solve");
  if (d > 2) throw ArgumentError("fd_reference_solve: only 1-d and 2-d problems are supported");
  if (static_cast<int>(grid.axes.size()) != d) throw ArgumentError("fd_reference_solve: need one axis per dimension");
  if (!(grid.r < T)) throw ArgumentError("fd_reference_solve: need r < T");
  if (grid.time_steps < 1) throw ArgumentError("fd_reference_solve: need at least one time step");
  if (!(grid.theta >= 0.5 && grid.theta <= 1.0)) throw ArgumentError("fd_reference_solve: theta must lie in [1/2, 1]");
  if (!u_T) throw ArgumentError("fd_reference_solve: missing terminal function");

  const double horizon = T - grid.r;
  std::vector<std::vector<double>> padded(d);
  std::vector<std::size_t> offset(d);
  std::vector<double> h(d);
  for (int j = 0; j < d; ++j) {
    const auto& ax = grid.axes[j];
    check_axis(ax, "fd_reference_solve");
    h[j] = (ax.back() - ax.front()) / static_cast<double>(ax.size() - 1);
    for (std::size_t i = 0; i < ax.size(); ++i)
      if (std::abs(ax[i] - (ax.front() + static_cast<double>(i) * h[j])) > 1e-9 * (1.0 + std::abs(ax[i])))
        throw ArgumentError("fd_reference_solve: axes must be uniform");
    const double reach = std::max(std::abs(ax.front()), std::abs(ax.back()));
    const double pad = grid.margin_sd * std::sqrt(cfg.Lambda() * horizon) + cfg.kappa_b() * (1.0 + reach) * horizon;
    offset[j] = static_cast<std::size_t>(std::ceil(pad / h[j])) + 1;
    const std::size_t n = ax.size() + 2 * offset[j];
    padded[j].resize(n);
    for (std::size_t i = 0; i < n; ++i)
      padded[j][i] = ax.front() + (static_cast<double>(i) - static_cast<double>(offset[j])) * h[j];
  }
  const std::size_t n0 = padded[0].size(), n1 = d == 2 ? padded[1].size() : 1;
  const std::size_t total = n0 * n1;
  auto node = [&](std::size_t i0, std::size_t i1) {
    Point x(d);
    x(0) = padded[0][i0];
    if (d == 2) x(1) = padded[1][i1];
    return x;
  };
  auto boundary = [&](std::size_t i0, std::size_t i1) {
    return i0 == 0 || i0 + 1 == n0 || (d == 2 && (i1 == 0 || i1 + 1 == n1));
  };

  std::vector<double> u(total), frozen(total);
  for (std::size_t i0 = 0; i0 < n0; ++i0)
    for (std::size_t i1 = 0; i1 < n1; ++i1) u[i0 * n1 + i1] = frozen[i0 * n1 + i1] = u_T(node(i0, i1));
  std::vector<double> w_next(total), w_now(total);
  for (std::size_t i0 = 0; i0 < n0; ++i0)
    for (std::size_t i1 = 0; i1 < n1; ++i1) w_next[i0 * n1 + i1] = scalar_w(field, T, node(i0, i1));

  const double dt = horizon / static_cast<double>(grid.time_steps);
  const double th = grid.theta;
  // One implicit line solve along `axis` for the operator 1/2 a_jj d_jj + b_j d_j,
  // plus an explicit source added to the right-hand side.
  auto line_step = [&](int axis, double t_mid, const std::vector<double>& src, std::vector<double>& out) {
    const std::size_t len = axis == 0 ? n0 : n1, lines = axis == 0 ? n1 : n0;
    const double hh = h[axis];
    parallel_for(lines, [&](std::size_t line) {
      std::vector<double> lo(len, 0.0), di(len, 1.0), up(len, 0.0), rhs(len);
      auto flat = [&](std::size_t k) { return axis == 0 ? k * n1 + line : line * n1 + k; };
      for (std::size_t k = 0; k < len; ++k) {
        const std::size_t f = flat(k);
        const std::size_t i0 = axis == 0 ? k : line, i1 = axis == 0 ? line : k;
        if (boundary(i0, i1)) {
          rhs[k] = frozen[f];
          continue;
        }
        const Point x = node(i0, i1);
        const double a = cfg.a(t_mid, x)(axis, axis);
        const double b = cfg.has_drift() ? cfg.b(t_mid, x)(axis) : 0.0;
        const double cm = 0.5 * a / (hh * hh) - 0.5 * b / hh;
        const double cc = -a / (hh * hh);
        const double cp = 0.5 * a / (hh * hh) + 0.5 * b / hh;
        const double lu = cm * u[flat(k - 1)] + cc * u[f] + cp * u[flat(k + 1)];
        rhs[k] = u[f] + (1.0 - th) * dt * lu + src[f];
        lo[k] = -th * dt * cm;
        di[k] = 1.0 - th * dt * cc;
        up[k] = -th * dt * cp;
      }
      thomas(lo, di, up, rhs);
      for (std::size_t k = 0; k < len; ++k) out[flat(k)] = rhs[k];
    });
  };

  std::vector<double> zero(total, 0.0), mixed(total, 0.0), next(total);
  for (std::size_t step = grid.time_steps; step-- > 0;) {
    const double t_now = step == 0 ? grid.r : grid.r + static_cast<double>(step) * dt;
    const double t_hi = step + 1 == grid.time_steps ? T : grid.r + static_cast<double>(step + 1) * dt;
    const double t_mid = 0.5 * (t_now + t_hi);
    for (std::size_t i0 = 0; i0 < n0; ++i0)
      for (std::size_t i1 = 0; i1 < n1; ++i1) {
        const std::size_t f = i0 * n1 + i1;
        w_now[f] = scalar_w(field, t_now, node(i0, i1));
        if (!boundary(i0, i1)) u[f] *= std::exp(w_next[f] - w_now[f]);
      }
    if (d == 1) {
      line_step(0, t_mid, zero, next);
      u.swap(next);
    } else {
      for (std::size_t i0 = 1; i0 + 1 < n0; ++i0)
        for (std::size_t i1 = 1; i1 + 1 < n1; ++i1) {
          const double a12 = cfg.a(t_mid, node(i0, i1))(0, 1);
          mixed[i0 * n1 + i1] = dt * a12 *
                                (u[(i0 + 1) * n1 + i1 + 1] - u[(i0 + 1) * n1 + i1 - 1] - u[(i0 - 1) * n1 + i1 + 1] +
                                 u[(i0 - 1) * n1 + i1 - 1]) /
                                (4.0 * h[0] * h[1]);
        }
      line_step(0, t_mid, mixed, next);
      u.swap(next);
      line_step(1, t_mid, zero, next);
      u.swap(next);
    }
    for (double v : u)
      if (!std::isfinite(v)) throw NumericalError("fd_reference_solve: solution became non-finite");
    w_next.swap(w_now);
  }

  FDSolution out;
  out.axes = grid.axes;
  out.padded_nodes = total;
  const std::size_t m0 = grid.axes[0].size(), m1 = d == 2 ? grid.axes[1].size() : 1;
  out.values.resize(m0 * m1);
  for (std::size_t i0 = 0; i0 < m0; ++i0)
    for (std::size_t i1 = 0; i1 < m1; ++i1)
      out.values[i0 * m1 + i1] = u[(i0 + offset[0]) * n1 + (d == 2 ? i1 + offset[1] : 0)];
  return out;
}

MomentReport exp_moment_probe(const DiffusionConfig& cfg, const field::RoughField& field, double r, const Point& x,
                              double T, const MCConfig& mc, const std::vector<double>& gammas, double growth) {
  require_scalar(field, cfg.dim(), "exp_moment_probe");
  if (mc.n_paths < 2) throw ArgumentError("exp_moment_probe: need at least two paths");
  const std::size_t total = 4 * mc.n_paths;
  std::vector<double> sup2(total), integral(total);
  parallel_for(total, [&](std::size_t i) {
    const DiffusionPath p = simulate_path(cfg, r, x, T, mc, i);
    double s = 0.0;
    for (const Point& xk : p.states) s = std::max(s, xk.squaredNorm());
    sup2[i] = s;
    integral[i] = path_grid_w_integral(field, p);
  });
  // Unstable: non-finite, growing by more than `growth` at every doubling, or
  // dominated by a single path.
  auto assess = [&](const std::vector<double>& samples, double gamma, std::vector<double>& est) {
    bool stable = true;
    for (std::size_t n = mc.n_paths; n <= total; n *= 2) {
      std::vector<double> logs(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(n));
      for (double& l : logs) l *= gamma;
      est.push_back(log_sum_mean(logs));
      if (!std::isfinite(est.back())) stable = false;
    }
    bool growing = true;
    for (std::size_t k = 1; k < est.size(); ++k)
      if (!(est[k] > (1.0 + growth) * est[k - 1])) growing = false;
    if (growing) stable = false;
    double top = -std::numeric_limits<double>::infinity();
    for (double s : samples) top = std::max(top, gamma * s);
    if (std::isfinite(top) && std::isfinite(est.back()) && est.back() > 0.0) {
      const double share = std::exp(top - std::log(est.back() * static_cast<double>(total)));
      if (share > 0.5) stable = false;
    }
    return stable;
  };
  MomentReport report;
  for (double gamma : gammas) {
    MomentRow row;
    row.gamma = gamma;
    row.sup_stable = assess(sup2, gamma, row.sup_moment);
    row.integral_stable = assess(integral, gamma, row.integral_moment);
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace rough::fk
