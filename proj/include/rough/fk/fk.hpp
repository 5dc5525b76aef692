#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rough/core/types.hpp"
#include "rough/field/field.hpp"
#include "rough/sewing/sewing.hpp"

namespace rough::fk {

using MatrixCoefficient = std::function<Mat(double, const Point&)>;
using VectorCoefficient = std::function<Vec(double, const Point&)>;
using ScalarFn = std::function<double(const Point&)>;

/// Spectral square root of a symmetric positive-definite matrix. Throws
/// NumericalError (reporting the smallest eigenvalue) otherwise.
Mat sqrt_spd(const Mat& a);

/// L = 1/2 a^{ij} d_i d_j + b^i d_i with uniform ellipticity bounds and a
/// Lipschitz/growth constant for b.
class DiffusionConfig {
 public:
  DiffusionConfig(int d, MatrixCoefficient a, VectorCoefficient b, double lambda_min, double Lambda, double kappa_b,
                  bool constant_a = false);
  /// a = s^2 I, b = 0.
  static DiffusionConfig brownian(int d, double s = 1.0);

  int dim() const noexcept { return d_; }
  Mat a(double t, const Point& x) const { return a_(t, x); }
  Vec b(double t, const Point& x) const;
  bool has_drift() const noexcept { return static_cast<bool>(b_); }
  /// sigma with sigma sigma^T = a; cached when a is declared constant.
  Mat sigma(double t, const Point& x) const;
  double lambda_min() const noexcept { return lambda_min_; }
  double Lambda() const noexcept { return Lambda_; }
  double kappa_b() const noexcept { return kappa_b_; }
  /// Same coefficients without the drift (the driftless diffusion of the v equation).
  DiffusionConfig driftless() const;

  /// Checks ellipticity, the square root and the drift bounds on `samples`
  /// seeded points of [0,1] x [-radius, radius]^d; throws ArgumentError.
  void validate(std::uint64_t seed = 0, std::size_t samples = 64, double radius = 3.0) const;

 private:
  int d_;
  MatrixCoefficient a_;
  VectorCoefficient b_;
  double lambda_min_, Lambda_, kappa_b_;
  std::shared_ptr<const Mat> constant_sigma_;
};

struct MCConfig {
  std::size_t n_paths = 1000;
  std::size_t n_steps = 100;
  std::uint64_t seed = 0;
  /// Odd paths reuse the increments of the preceding even path with the opposite sign.
  bool antithetic = false;
};

struct DiffusionPath {
  std::vector<double> times;
  std::vector<Point> states;
  std::vector<Vec> increments;  ///< Brownian increments dB_k, one per step
};

/// Euler-Maruyama path `index` from (r, x) to T. A path is a pure function
/// of (seed, index) and never depends on the other paths.
DiffusionPath simulate_path(const DiffusionConfig& cfg, double r, const Point& x, double T, const MCConfig& mc,
                            std::size_t index);
/// All n_paths paths, in parallel.
std::vector<DiffusionPath> simulate_diffusion(const DiffusionConfig& cfg, double r, const Point& x, double T,
                                              const MCConfig& mc);

struct PathwiseOptions {
  bool strict = true;
  /// The Hölder exponent assumed for diffusion paths is 1/2 - margin.
  double margin = 0.02;
  sewing::SewOptions sew;
};

/// int W(ds, X_s) along the piecewise-linear path, sewn to tolerance.
/// Strict mode requires tau + lambda (1/2 - margin) > 1.
double pathwise_w_integral(const field::RoughField& field, const DiffusionPath& path,
                           const PathwiseOptions& options = {});

/// The Riemann sum of the same germ on the path's own time grid.
double path_grid_w_integral(const field::RoughField& field, const DiffusionPath& path);

/// v and grad v for the Itô-trick representation.
struct VFunction {
  std::function<double(double, const Point&)> value;
  std::function<Vec(double, const Point&)> gradient;
};

struct VEstimate {
  double v = 0.0;
  double std_error = 0.0;
  Vec gradient;
};

struct VOptions {
  std::size_t inner_paths = 2000;
  std::size_t inner_steps = 50;
  std::uint64_t seed = 0;
  double fd_step = 1e-2;
};

/// v(r,x) = -W(r,x) - E int_r^T L0 W(s, phi_s) ds with phi the driftless
/// diffusion from (r,x) and L0 = 1/2 a^{ij} d_i d_j. grad v by central
/// differences in x with common random numbers. Needs the field's Hessian.
VEstimate solve_v(const field::RoughField& field, const DiffusionConfig& cfg, double r, const Point& x, double T,
                  const VOptions& options = {});

/// v and grad v tabulated on a space-time lattice by solve_v and
/// interpolated multilinearly. Queries outside the lattice throw ArgumentError.
class VLattice {
 public:
  VLattice(const field::RoughField& field, const DiffusionConfig& cfg, double T, std::vector<double> times,
           std::vector<std::vector<double>> axes, const VOptions& options = {});
  double value(double t, const Point& x) const;
  Vec gradient(double t, const Point& x) const;
  bool covers(double t, const Point& x) const;
  VFunction as_function() const;

 private:
  struct Data;
  std::shared_ptr<const Data> data_;
};

struct ItoTerms {
  double v_start = 0.0;     ///< v(r, x)
  double v_end = 0.0;       ///< v(t, X_t)
  double drift = 0.0;       ///< int b . grad v ds
  double stochastic = 0.0;  ///< int grad v sigma dB (Itô sum)
  double value = 0.0;       ///< v_start - v_end + drift + stochastic
};

/// int W(ds, X_s) = v(r,x) - v(t,X_t) + int b.grad v ds + int grad v sigma dB,
/// with left-point sums on the path grid and its recorded increments.
ItoTerms ito_trick_integral(const DiffusionConfig& cfg, const DiffusionPath& path, const VFunction& v);

enum class Route { pathwise, ito_trick };

struct FKPoint {
  double r = 0.0;
  Point x;
};

struct FKOptions {
  Route route = Route::pathwise;
  /// Sew each path integral to tolerance instead of summing on the path grid.
  bool sewn = false;
  PathwiseOptions pathwise;
  /// Required for the Itô-trick route.
  std::optional<VFunction> v;
  /// Fraction of paths with exp overflow above which a point is flagged.
  double overflow_threshold = 1e-3;
};

struct FKDiagnostics {
  double overflow_fraction = 0.0;
  double max_log_weight = 0.0;
  double mean_integral = 0.0;
  bool unstable = false;
  std::optional<std::string> warning;
};

struct FKSolution {
  std::vector<FKPoint> points;
  std::vector<double> u;
  std::vector<double> std_error;
  std::vector<FKDiagnostics> diagnostics;
};

/// u(r,x) = E[u_T(X_T) exp(int_r^T W(ds, X_s))] per grid point. Path i uses
/// stream i at every point (common random numbers); weights are combined
/// through log-sum-exp.
FKSolution feynman_kac_solve(const field::RoughField& field, const DiffusionConfig& cfg, const ScalarFn& u_T,
                             const std::vector<FKPoint>& points, double T, const MCConfig& mc,
                             const FKOptions& options = {});

/// Plain E[u_T(X_T)] with the same paths and reduction.
FKSolution expected_terminal(const DiffusionConfig& cfg, const ScalarFn& u_T, const std::vector<FKPoint>& points,
                             double T, const MCConfig& mc);

struct FDGrid {
  /// One or two uniform axes covering the region of interest.
  std::vector<std::vector<double>> axes;
  double r = 0.0;
  std::size_t time_steps = 200;
  /// 0.5 is Crank-Nicolson, 1 is implicit Euler.
  double theta = 0.5;
  /// Extra margin, in standard deviations sqrt(Lambda (T-r)), added on every side.
  double margin_sd = 3.0;
};

struct FDSolution {
  std::vector<std::vector<double>> axes;  ///< the requested axes
  std::vector<double> values;             ///< u(r, .) row-major on `axes`
  std::size_t padded_nodes = 0;
  double at(const Point& x) const;        ///< multilinear interpolation
};

/// Theta-scheme for d_t u + L u + u d_t W = 0 backward from u_T: each step
/// multiplies by exp(W(t_{n+1},x) - W(t_n,x)) and then takes a diffusion
/// step (Thomas solves, Lie splitting over axes in 2-d, explicit mixed term).
/// Dirichlet data u_T on a padded box. Throws NumericalError on a singular
/// tridiagonal system.
FDSolution fd_reference_solve(const field::RoughField& field, const DiffusionConfig& cfg, const ScalarFn& u_T,
                              double T, const FDGrid& grid);

struct MomentRow {
  double gamma = 0.0;
  std::vector<double> sup_moment;       ///< E exp(gamma sup_t |X_t|^2) at n, 2n, 4n paths
  std::vector<double> integral_moment;  ///< E exp(gamma int W(ds, X_s)) at n, 2n, 4n paths
  bool sup_stable = true;
  bool integral_stable = true;
};

struct MomentReport {
  std::vector<MomentRow> rows;
};

/// Exponential moments at n_paths, 2 n_paths and 4 n_paths. An estimate is
/// flagged unstable when it is non-finite or keeps growing by more than
/// `growth` per doubling.
MomentReport exp_moment_probe(const DiffusionConfig& cfg, const field::RoughField& field, double r, const Point& x,
                              double T, const MCConfig& mc, const std::vector<double>& gammas,
                              double growth = 0.25);

}  // namespace rough::fk
