#pragma once

#include "rough/field/field.hpp"

namespace rough::field {

/// Normalising constant c of the bump eta(z) = c exp(1/(|z|^2-1)) on the unit
/// ball of R^n, so that eta integrates to 1. Computed once per n from the
/// radial integral and cached.
double bump_constant(int n);

/// eta(z) for z in R^n (zero outside the open unit ball).
double bump(const Vec& z);

/// Tensor Gauss-Legendre quadrature of the normalised bump over [-1,1]^n,
/// without any discrete renormalisation. Converges to 1.
double bump_mass(int n, int nodes_per_axis);

struct MollifyOptions {
  int nodes_per_axis = 9;
};

/// Space-time convolution W * eta_eps with eta_eps(z) = eps^{-(d+1)} eta(z/eps)
/// on R^{d+1}. The output domain is the input domain shrunk by eps. The
/// quadrature weights are renormalised to unit discrete mass, and the
/// derivative weights to reproduce derivatives of affine (gradient, time
/// derivative) and quadratic (Hessian) functions exactly, so the result carries
/// a Jacobian, a Hessian and a time derivative.
RoughField mollify(const RoughField& field, double epsilon, MollifyOptions options = {});

}  // namespace rough::field
