#pragma once

#include <vector>

namespace rough {

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point rule, nodes ascending. Results are cached per n.
const GaussLegendre& gauss_legendre(int n);

}  // namespace rough
