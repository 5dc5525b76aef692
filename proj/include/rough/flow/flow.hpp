#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rough/field/field.hpp"
#include "rough/sewing/path.hpp"
#include "rough/sewing/sewing.hpp"

namespace rough::flow {

using field::RoughField;

enum class Scheme {
  /// Davie when the field carries a Jacobian, Euler otherwise.
  automatic,
  /// phi_{k+1} = phi_k + D_k, D_k = W(t_{k+1}, phi_k) - W(t_k, phi_k).
  euler,
  /// phi_{k+1} = phi_k + D_k + (grad D_k) D_k / 2.
  davie,
};

/// Free constants of the a-priori bound C exp(kappa ||W||^{(1-tau+tau lambda)/(tau lambda)}) (1 v |x0|).
struct AprioriConstants {
  double C = 1.0;
  double kappa = 1.0;
};

struct FlowOptions {
  Scheme scheme = Scheme::automatic;
  /// Refuse fields with tau (1 + lambda) <= 1.
  bool strict = true;
  AprioriConstants constants;
  /// |phi| beyond blowup_factor * a-priori bound raises DivergenceError.
  double blowup_factor = 1e3;
  /// ||W|| used by the a-priori bound and the step cap; estimated on a coarse
  /// grid over the field domain when absent.
  std::optional<double> field_norm;
  /// When set, the uniform step is capped by (2 A ||W||)^{-1/(tau lambda)}.
  std::optional<double> step_cap_A;
  /// Spacing for finite-difference Jacobians/Hessians when the field has none.
  double fd_step = 1e-5;
};

struct FlowSolution {
  std::vector<double> times;   ///< in integration order (decreasing for backward solves)
  std::vector<Point> states;
  std::string field_ref;
  std::size_t step_count = 0;
  Scheme scheme = Scheme::euler;
  double field_norm = 0.0;
  double a_priori_bound = 0.0;
  double achieved_sup = 0.0;
  std::vector<std::string> warnings;

  const Point& final_state() const { return states.back(); }
  /// The trajectory as a path on ascending times with exponent gamma.
  sewing::Path as_path(double gamma) const;
  /// Grid tau-Hölder norm of the trajectory.
  double achieved_holder(double tau) const;
};

/// Evaluates C exp(kappa ||W||^{(1-tau+tau lambda)/(tau lambda)}) (1 v |x0|).
double a_priori_sup_bound(double field_norm, double x0_norm, double T, double tau, double lambda,
                          const AprioriConstants& constants = {});

/// Coarse grid estimate of ||W||_{beta,tau,lambda} over the whole field domain.
double estimate_field_norm(const RoughField& field, std::size_t n_times = 9, std::size_t per_axis = 9);

/// phi_t = x0 + int_{t0}^t W(ds, phi_s) on a uniform grid of `steps` steps
/// from t0 to T (T < t0 integrates backwards).
FlowSolution solve_rough_ode(const RoughField& field, const Point& x0, double t0, double T, std::size_t steps,
                             const FlowOptions& options = {});

/// max over `checkpoints` evenly spaced nodes of |phi_t - x0 - int_{t0}^t W(ds, phi_s)|,
/// the integral sewn along the computed (interpolated) trajectory.
double ode_residual(const RoughField& field, const FlowSolution& flow, const sewing::SewOptions& sew,
                    std::size_t checkpoints = 8);

struct FlowMap {
  std::vector<Point> initial_points;
  std::vector<FlowSolution> trajectories;
  std::vector<double> times;
  bool injective = true;
  double min_final_distance = 0.0;
};

/// Solves from every grid point in parallel. Injectivity: the pairwise minimum
/// distance at the final time must exceed 1e-8 times the domain diameter.
FlowMap flow_map(const RoughField& field, const std::vector<Point>& grid, double t0, double t, std::size_t steps,
                 const FlowOptions& options = {});

/// psi(t, x): integrates from time t back to t0 starting at x, so that
/// psi(t, phi(t, x)) = x.
Point inverse_flow(const RoughField& field, const Point& x, double t0, double t, std::size_t steps,
                   const FlowOptions& options = {});

struct JacobianPath {
  std::vector<double> times;
  std::vector<Mat> matrices;   ///< grad phi
  std::vector<Mat> inverses;   ///< M, with grad phi M = I
  std::vector<double> dets;    ///< J from the scalar determinant equation
  std::vector<double> exp_div; ///< exp of the accumulated divergence increments
};

/// Solves the Jacobian, inverse-Jacobian and determinant equations along the
/// trajectory with the exponential germ A_k = grad D_k + (hess D_k . D_k)/2:
/// G_{k+1} = exp(A_k) G_k, M_{k+1} = M_k exp(-A_k),
/// J_{k+1} = J_k (1 + tr A_k + (tr A_k)^2 / 2).
/// Throws CapabilityError when the field has no Jacobian.
JacobianPath jacobian_path(const RoughField& field, const FlowSolution& flow, const FlowOptions& options = {});

struct LagrangianReport {
  double L = 0.0;       ///< max |J(-t, x)| over the samples
  double kappa = 0.0;   ///< smallest kappa with L <= exp(kappa |t|^tau)
  double bound = 0.0;   ///< exp(kappa_used |t|^tau)
};

/// `backward` holds Jacobian paths of backward flows over a time span of
/// length |t|. `kappa` (when given) is used for the bound instead of the fit.
LagrangianReport lagrangian_compressibility(const std::vector<JacobianPath>& backward, double t_span, double tau,
                                            std::optional<double> kappa = std::nullopt);

struct ChainRuleReport {
  double lhs = 0.0;         ///< int g dF(t, x_t)
  double rhs_time = 0.0;    ///< int g F(dt, x_t)
  double rhs_space = 0.0;   ///< int g grad F(t, x_t) W(dt, phi_t)
  double residual = 0.0;    ///< sewn from the germ of lhs - rhs_time - rhs_space
};

struct ChainRuleOptions {
  sewing::SewOptions sew;
  bool strict = true;
};

/// Chain rule along a flow trajectory x = phi. Each integral is sewn on its
/// own; the residual is sewn from the difference of the three germs.
ChainRuleReport chain_rule_residual(const RoughField& F, const sewing::Path& g, const RoughField& W,
                                    const FlowSolution& flow, double a, double b,
                                    const ChainRuleOptions& options = {});

struct StabilityGap {
  double gap = 0.0;          ///< sup_t |x_t - y_t|
  double bound = 0.0;        ///< 2^{kappa T A^{1/tau}} |x0 - y0|
  double A = 0.0;            ///< kappa ||grad W|| (1 + rho_tau T^{lambda tau})
  double grad_norm = 0.0;    ///< grid estimate of ||grad W||
  bool holds = false;
};

/// Two trajectories from x0 and y0 and the bound of the uniqueness theorem.
StabilityGap stability_gap(const RoughField& field, const Point& x0, const Point& y0, double t0, double T,
                           std::size_t steps, double kappa = 1.0, const FlowOptions& options = {});

}  // namespace rough::flow
