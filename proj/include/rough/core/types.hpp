#pragma once

#include <Eigen/Dense>

namespace rough {

/// Upper bound on spatial dimension and value dimension. Storage for points,
/// values and small matrices lives inline (no heap traffic in inner loops).
inline constexpr int kMaxDim = 4;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

using Point = Vec;
using Value = Vec;

inline Vec make_vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

inline Vec scalar_value(double x) {
  Vec v(1);
  v(0) = x;
  return v;
}

}  // namespace rough
