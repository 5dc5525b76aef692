#pragma once

#include <string>
#include <vector>

#include "rough/field/field.hpp"

namespace rough::field {

/// Scalar values on a tensor grid, row-major with the last axis fastest.
/// For space-time fields axis 0 is time.
struct GridArray {
  std::vector<std::vector<double>> axes;
  std::vector<double> values;

  std::vector<std::size_t> shape() const;
  std::size_t size() const;
  /// Flat index of a multi-index.
  std::size_t flat(const std::vector<std::size_t>& index) const;
  /// Throws ArgumentError unless every axis is strictly increasing with at
  /// least two nodes and values.size() matches the shape.
  void validate() const;
};

/// Multilinear interpolant of a space-time array; exact at grid nodes. The
/// domain is the bounding box of the axes.
RoughField grid_field(std::string name, const GridArray& array, const HolderProfile& profile);

/// Samples a scalar field on the tensor grid (time axis first).
GridArray tabulate(const RoughField& field, const std::vector<std::vector<double>>& axes);

/// CSV layout: '#'-prefixed header rows "# shape n0,n1,..." and
/// "# axisK v0,v1,...", then one row per leading multi-index holding the
/// last-axis values. Floats are written with 17 significant digits.
void write_grid_csv(const std::string& path, const GridArray& array);
GridArray read_grid_csv(const std::string& path);

/// n evenly spaced values from lo to hi inclusive.
std::vector<double> linspace(double lo, double hi, std::size_t n);

}  // namespace rough::field
