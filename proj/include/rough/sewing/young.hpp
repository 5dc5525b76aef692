#pragma once

#include "rough/field/field.hpp"
#include "rough/field/seminorm.hpp"
#include "rough/sewing/path.hpp"
#include "rough/sewing/sewing.hpp"

namespace rough::sewing {

struct YoungOptions {
  SewOptions sew;
  /// Refuse fields/paths violating tau + lambda gamma > 1. When false the
  /// integral is still computed and a warning is attached.
  bool strict = true;
};

/// Germ W(t, phi_s) - W(s, phi_s).
Germ young_germ(const field::RoughField& field, const Path& path);
/// Germ W(t, phi_t) - W(s, phi_t).
Germ right_endpoint_germ(const field::RoughField& field, const Path& path);

/// int_a^b W(ds, phi_s) by sewing the left-point germ.
SewingResult nonlinear_young_integral(const field::RoughField& field, const Path& path, double a,
                                      double b, const YoungOptions& options = {});
/// Same limit from the right-point germ.
SewingResult right_endpoint_integral(const field::RoughField& field, const Path& path, double a,
                                     double b, const YoungOptions& options = {});

struct SymmetricOptions {
  int nodes_per_cell = 8;
};

/// (2 eps)^{-1} int_a^b (W(s+eps, phi_s) - W(s-eps, phi_s)) ds by composite
/// Gauss-Legendre over the cells of the path grid inside [a,b]. Exact for
/// fields piecewise polynomial in time on the same grid when eps is a
/// multiple of the grid step.
Value symmetric_integral_approx(const field::RoughField& field, const Path& path, double a, double b,
                                double epsilon, const SymmetricOptions& options = {});

struct StabilityReport {
  double observed_gap = 0.0;
  double bound = 0.0;
  bool holds = false;
  double seminorm = 0.0;  ///< grid estimate of the rect seminorm used in the bound
};

struct StabilityOptions {
  double constant = 10.0;  ///< the free constant c of the bound
  YoungOptions young;
  std::size_t seminorm_times = 17;
  std::size_t seminorm_points_per_axis = 17;
};

/// |int W1(ds,phi) - int W2(ds,phi)| against
///   |W1(b,phi_a)-W1(a,phi_a)-W2(b,phi_a)+W2(a,phi_a)|
///     + c (1+|phi|_inf^beta) [W1-W2] |phi|_gamma^lambda |b-a|^{tau+lambda gamma}.
StabilityReport integral_stability_in_W(const field::RoughField& w1, const field::RoughField& w2,
                                        const Path& path, double a, double b,
                                        const StabilityOptions& options = {});

/// |int W(ds,phi1) - int W(ds,phi2)| on [a,b] against
///   C1 [W] |phi1-phi2|_inf^lambda |b-a|^tau
///     + C2 [W] |phi1-phi2|_inf^{lambda(1-theta)} |b-a|^{tau+theta lambda gamma} / (1-2^{-(tau+theta lambda gamma-1)})
/// with C1 = 1 + |phi1|_inf^beta + |phi2|_inf^beta and
/// C2 = 2^{1-theta} C1 (|phi1|_gamma^lambda + |phi2|_gamma^lambda)^theta, both
/// scaled by the free constant c.
StabilityReport integral_stability_in_phi(const field::RoughField& field, const Path& phi1,
                                          const Path& phi2, double theta, double a, double b,
                                          const StabilityOptions& options = {});

/// Grid of times on [a,b] and points covering the bounding box of the paths
/// (clipped to `box`), used for the seminorms in the stability bounds.
field::GridSpec covering_grid(const std::vector<const Path*>& paths, const field::Domain& box,
                              double a, double b, std::size_t n_times, std::size_t per_axis);

}  // namespace rough::sewing
