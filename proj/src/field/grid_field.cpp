#include "rough/field/grid_field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "rough/core/errors.hpp"
#include "rough/core/parallel.hpp"

namespace rough::field {

std::vector<std::size_t> GridArray::shape() const {
  std::vector<std::size_t> s;
  for (const auto& a : axes) s.push_back(a.size());
  return s;
}

std::size_t GridArray::size() const {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.size();
  return n;
}

std::size_t GridArray::flat(const std::vector<std::size_t>& index) const {
  std::size_t f = 0;
  for (std::size_t k = 0; k < axes.size(); ++k) f = f * axes[k].size() + index[k];
  return f;
}

void GridArray::validate() const {
  if (axes.empty()) throw ArgumentError("grid array: no axes");
  for (const auto& a : axes) {
    if (a.size() < 2) throw ArgumentError("grid array: every axis needs >= 2 nodes");
    for (std::size_t i = 1; i < a.size(); ++i) {
      if (!(a[i] > a[i - 1])) throw ArgumentError("grid array: axis not strictly increasing");
    }
  }
  if (values.size() != size()) throw ArgumentError("grid array: value count does not match shape");
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  if (n < 2) throw ArgumentError("linspace: need >= 2 points");
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  v.back() = hi;
  return v;
}

namespace {

struct Axis {
  std::vector<double> nodes;
  bool uniform = false;
  double origin = 0.0;
  double inv_step = 0.0;

  explicit Axis(std::vector<double> n) : nodes(std::move(n)) {
    const double step = (nodes.back() - nodes.front()) / static_cast<double>(nodes.size() - 1);
    uniform = true;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const double expected = nodes.front() + step * static_cast<double>(i);
      if (std::fabs(nodes[i] - expected) > 1e-12 * (1.0 + std::fabs(expected))) {
        uniform = false;
        break;
      }
    }
    origin = nodes.front();
    inv_step = 1.0 / step;
  }

  // Cell index i and local coordinate in [0,1] with nodes[i] <= v <= nodes[i+1].
  void locate(double v, std::size_t& cell, double& frac) const {
    const std::size_t last = nodes.size() - 2;
    if (uniform) {
      const double pos = (v - origin) * inv_step;
      double fl = std::floor(pos);
      fl = std::clamp(fl, 0.0, static_cast<double>(last));
      cell = static_cast<std::size_t>(fl);
    } else {
      auto it = std::upper_bound(nodes.begin(), nodes.end(), v);
      const std::size_t up = static_cast<std::size_t>(it - nodes.begin());
      cell = up == 0 ? 0 : std::min(up - 1, last);
    }
    frac = (v - nodes[cell]) / (nodes[cell + 1] - nodes[cell]);
    // Exact node hits return the stored value bit for bit.
    if (v == nodes[cell]) frac = 0.0;
    if (v == nodes[cell + 1]) frac = 1.0;
  }
};

struct Interpolant {
  std::vector<Axis> axes;
  std::vector<std::size_t> strides;
  std::vector<double> values;

  double operator()(double t, const Point& x) const {
    const std::size_t n = axes.size();
    std::array<std::size_t, kMaxDim + 1> cell{};
    std::array<double, kMaxDim + 1> frac{};
    axes[0].locate(t, cell[0], frac[0]);
    for (std::size_t k = 1; k < n; ++k) axes[k].locate(x(static_cast<Eigen::Index>(k - 1)), cell[k], frac[k]);
    std::size_t base = 0;
    for (std::size_t k = 0; k < n; ++k) base += cell[k] * strides[k];
    double acc = 0.0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      double w = 1.0;
      std::size_t off = base;
      for (std::size_t k = 0; k < n; ++k) {
        if ((mask >> k) & 1u) {
          w *= frac[k];
          off += strides[k];
        } else {
          w *= 1.0 - frac[k];
        }
      }
      if (w != 0.0) acc += w * values[off];
    }
    return acc;
  }
};

}  // namespace

RoughField grid_field(std::string name, const GridArray& array, const HolderProfile& profile) {
  array.validate();
  const std::size_t n = array.axes.size();
  if (n < 2 || n > static_cast<std::size_t>(kMaxDim) + 1) {
    throw ArgumentError("grid_field: need a time axis and 1.." + std::to_string(kMaxDim) + " space axes");
  }
  auto interp = std::make_shared<Interpolant>();
  for (const auto& a : array.axes) interp->axes.emplace_back(a);
  interp->strides.assign(n, 1);
  for (std::size_t k = n - 1; k-- > 0;) interp->strides[k] = interp->strides[k + 1] * array.axes[k + 1].size();
  interp->values = array.values;

  const int d = static_cast<int>(n) - 1;
  Domain dom;
  dom.t_lo = array.axes[0].front();
  dom.t_hi = array.axes[0].back();
  dom.x_lo = Vec(d);
  dom.x_hi = Vec(d);
  for (int k = 0; k < d; ++k) {
    dom.x_lo(k) = array.axes[k + 1].front();
    dom.x_hi(k) = array.axes[k + 1].back();
  }
  std::shared_ptr<const Interpolant> shared = interp;
  return RoughField(std::move(name), d, 1, profile, dom,
                    [shared](double t, const Point& x) { return scalar_value((*shared)(t, x)); });
}

GridArray tabulate(const RoughField& field, const std::vector<std::vector<double>>& axes) {
  if (field.dim_out() != 1) throw ArgumentError("tabulate: scalar fields only");
  if (axes.size() != static_cast<std::size_t>(field.dim_in()) + 1) {
    throw ArgumentError("tabulate: expected one time axis and one axis per space dimension");
  }
  GridArray out;
  out.axes = axes;
  out.values.assign(out.size(), 0.0);
  const std::vector<std::size_t> shape = out.shape();
  const std::size_t rows = shape[0];
  const std::size_t per_row = out.size() / rows;
  parallel_for(rows, [&](std::size_t i) {
    Point x(field.dim_in());
    for (std::size_t r = 0; r < per_row; ++r) {
      std::size_t rest = r;
      for (std::size_t k = axes.size() - 1; k >= 1; --k) {
        x(static_cast<Eigen::Index>(k - 1)) = axes[k][rest % shape[k]];
        rest /= shape[k];
      }
      out.values[i * per_row + r] = field(axes[0][i], x)(0);
    }
  });
  return out;
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> parse_row(const std::string& text, const std::string& where) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
    } catch (const std::exception&) {
      throw ArgumentError("grid csv: bad number '" + cell + "' in " + where);
    }
  }
  return out;
}

}  // namespace

void write_grid_csv(const std::string& path, const GridArray& array) {
  array.validate();
  std::ofstream os(path);
  if (!os) throw ArgumentError("cannot open " + path + " for writing");
  const auto shape = array.shape();
  os << "# shape ";
  for (std::size_t k = 0; k < shape.size(); ++k) os << (k ? "," : "") << shape[k];
  os << '\n';
  for (std::size_t k = 0; k < array.axes.size(); ++k) {
    os << "# axis" << k << ' ';
    for (std::size_t i = 0; i < array.axes[k].size(); ++i) os << (i ? "," : "") << fmt17(array.axes[k][i]);
    os << '\n';
  }
  const std::size_t row = shape.back();
  for (std::size_t i = 0; i < array.values.size(); ++i) {
    os << fmt17(array.values[i]) << ((i + 1) % row == 0 ? '\n' : ',');
  }
}

GridArray read_grid_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ArgumentError("cannot open grid file " + path);
  GridArray out;
  std::vector<std::size_t> shape;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::stringstream ss(line.substr(1));
      std::string key, rest;
      ss >> key;
      std::getline(ss, rest);
      if (key == "shape") {
        for (double v : parse_row(rest, "shape")) shape.push_back(static_cast<std::size_t>(v));
      } else if (key.rfind("axis", 0) == 0) {
        out.axes.push_back(parse_row(rest, key));
      }
      continue;
    }
    for (double v : parse_row(line, path)) out.values.push_back(v);
  }
  if (shape.size() != out.axes.size()) throw ArgumentError("grid csv: shape/axis header mismatch in " + path);
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if (out.axes[k].size() != shape[k]) throw ArgumentError("grid csv: axis length mismatch in " + path);
  }
  out.validate();
  return out;
}

}  // namespace rough::field
