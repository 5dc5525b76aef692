#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "rough/core/types.hpp"
#include "rough/field/field.hpp"
#include "rough/flow/flow.hpp"
#include "rough/sewing/sewing.hpp"

namespace rough::transport {

/// Initial datum h with its gradient.
struct InitialDatum {
  std::function<double(const Point&)> value;
  std::function<Vec(const Point&)> gradient;
};

/// du/dt + dW/dt . grad u = 0 with u(t0, .) = h, evaluated on `grid`.
struct TransportProblem {
  field::RoughField field;
  InitialDatum h;
  double t0 = 0.0;
  std::vector<Point> grid;

  /// Vector field with a Jacobian, datum with both callbacks, and a gradient
  /// that agrees with central differences at the grid points.
  void validate() const;
};

struct TransportSolution {
  double t = 0.0;
  std::vector<Point> grid;
  std::vector<double> values;  ///< h(psi(t,x)); NaN at invalid nodes
  std::vector<Point> psi;      ///< backward characteristic foot psi(t,x)
  std::vector<char> valid;     ///< 0 where the characteristic leaves the field box
  std::size_t invalid_count = 0;
};

/// u(t,x) = h(psi(t,x)) with psi from the backward flow, in parallel over the grid.
TransportSolution solve_transport(const TransportProblem& problem, double t, std::size_t steps,
                                  const flow::FlowOptions& options = {});

/// u(t,x) at a single point; throws DomainError if the characteristic leaves the box.
double transport_value(const TransportProblem& problem, double t, const Point& x, std::size_t steps,
                       const flow::FlowOptions& options = {});

/// max over valid grid nodes x of |u(t, phi(t,x)) - h(x)|.
double characteristics_gap(const TransportProblem& problem, double t, std::size_t steps,
                           const flow::FlowOptions& options = {});

struct ResidualOptions {
  /// Uniform time nodes on [t0, t] carrying grad u; must be a power of two.
  std::size_t time_cells = 64;
  /// Central-difference spacing; 0 means width of the first axis / 256.
  double hx = 0.0;
  /// Flow steps for a backward solve over the whole span [t0, t].
  std::size_t steps = 1024;
  sewing::SewOptions sew;
  flow::FlowOptions flow;
};

struct ResidualReport {
  double residual = 0.0;  ///< u(t,x) - h(x) + int grad u(s,x) W(ds,x)
  double u = 0.0;
  double h = 0.0;
  double integral = 0.0;
  double hx = 0.0;
  std::size_t time_cells = 0;
};

/// Residual of the integral form of the equation at x. grad u is tabulated by
/// central differences at the time nodes and interpolated linearly between
/// them; the Young integral is sewn down to the node spacing.
ResidualReport transport_residual(const TransportProblem& problem, const Point& x, double t,
                                  const ResidualOptions& options = {});

struct UniquenessReport {
  std::vector<std::size_t> steps;    ///< N_0, 2 N_0, ...
  std::vector<double> discrepancy;   ///< max_x |u_{2N} - u_N| for each N
  bool monotone = false;             ///< discrepancies strictly decreasing (or all zero)
};

/// Re-solves with doubled step counts and reports the max grid discrepancy
/// between consecutive solutions.
UniquenessReport uniqueness_probe(const TransportProblem& problem, double t, std::size_t base_steps,
                                  std::size_t refinements, const flow::FlowOptions& options = {});

}  // namespace rough::transport
