#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rough/cli/cli.hpp"
#include "rough/field/grid_field.hpp"
#include "rough/field/library.hpp"
#include "rough/field/mollify.hpp"
#include "rough/gaussian/fbm.hpp"
#include "rough/gaussian/sheet.hpp"

namespace rough::cli {
namespace {

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw UsageError(std::string("field spec: bad value for '") + key + "'");
  }
}

std::vector<double> number_list(const Json& j, const char* what) {
  if (!j.is_array()) throw UsageError(std::string(what) + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw UsageError(std::string(what) + " must be an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

Vec to_vec(const std::vector<double>& v) {
  if (v.empty() || v.size() > static_cast<std::size_t>(kMaxDim)) throw UsageError("vector dimension out of range");
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

struct Driver {
  field::TimeFn g;
  field::TimeFn g_prime;
  double tau = 1.0;
};

// "identity", "sin", "fbm:<H>" or {kind: fbm, H, n, horizon, stream}.
Driver driver_from_json(const Json& j, std::uint64_t seed) {
  std::string kind = "identity";
  double H = 0.8, horizon = 1.0;
  std::size_t n = 4096;
  std::uint64_t stream = 0;
  if (j.is_string()) {
    kind = j.get<std::string>();
    if (kind.rfind("fbm:", 0) == 0) {
      H = std::stod(kind.substr(4));
      kind = "fbm";
    }
  } else if (j.is_object()) {
    kind = get_or<std::string>(j, "kind", "fbm");
    H = get_or(j, "H", H);
    n = get_or(j, "n", n);
    horizon = get_or(j, "horizon", horizon);
    stream = get_or(j, "stream", stream);
  } else if (!j.is_null()) {
    throw UsageError("driver must be a string or an object");
  }
  if (kind == "identity") return {[](double t) { return t; }, [](double) { return 1.0; }, 1.0};
  if (kind == "sin") return {[](double t) { return std::sin(t); }, [](double t) { return std::cos(t); }, 1.0};
  if (kind == "fbm") {
    if (!(H > 0.0 && H < 1.0) || n < 2 || !(horizon > 0.0)) throw UsageError("fbm driver needs 0<H<1, n>=2, horizon>0");
    return {field::interpolated(gaussian::uniform_times(n, horizon), gaussian::fbm_path(H, n, horizon, seed, stream)),
            nullptr, H - 0.02};
  }
  throw UsageError("unknown driver '" + kind + "'");
}

field::SpatialFn spatial_from_name(const std::string& name) {
  if (name == "sin")
    return {[](const Point& x) { return std::sin(x.sum()); },
            [](const Point& x) { return Vec(Vec::Constant(x.size(), std::cos(x.sum()))); },
            [](const Point& x) { return Mat(Mat::Constant(x.size(), x.size(), -std::sin(x.sum()))); }};
  if (name == "cos")
    return {[](const Point& x) { return std::cos(x.sum()); },
            [](const Point& x) { return Vec(Vec::Constant(x.size(), -std::sin(x.sum()))); },
            [](const Point& x) { return Mat(Mat::Constant(x.size(), x.size(), -std::cos(x.sum()))); }};
  if (name == "gauss")
    return {[](const Point& x) { return std::exp(-x.squaredNorm()); },
            [](const Point& x) { return Vec(-2.0 * x * std::exp(-x.squaredNorm())); },
            [](const Point& x) {
              const double e = std::exp(-x.squaredNorm());
              return Mat(e * (4.0 * x * x.transpose() - 2.0 * Mat::Identity(x.size(), x.size())));
            }};
  if (name == "quadratic")
    return {[](const Point& x) { return x.squaredNorm(); }, [](const Point& x) { return Vec(2.0 * x); },
            [](const Point& x) { return Mat(2.0 * Mat::Identity(x.size(), x.size())); }};
  throw UsageError("unknown spatial profile '" + name + "'");
}

field::Domain domain_from_json(const Json& spec, int d) {
  const Json dom = spec.value("domain", Json::object());
  const auto t = dom.contains("t") ? number_list(dom["t"], "domain.t") : std::vector<double>{0.0, 1.0};
  const auto x = dom.contains("x") ? number_list(dom["x"], "domain.x") : std::vector<double>{-10.0, 10.0};
  if (t.size() != 2 || x.size() != 2) throw UsageError("domain.t and domain.x must be [lo, hi]");
  return field::Domain::cube(t[0], t[1], d, x[0], x[1]);
}

field::HolderProfile profile_from_json(const Json& spec, field::HolderProfile base) {
  if (!spec.contains("profile")) return base;
  const Json& p = spec["profile"];
  base.tau = get_or(p, "tau", base.tau);
  base.lambda = get_or(p, "lambda", base.lambda);
  base.beta = get_or(p, "beta", base.beta);
  base.validate();
  return base;
}

field::HolderProfile make_profile(double tau, double lambda) {
  field::HolderProfile p;
  p.tau = tau;
  p.lambda = lambda;
  return p;
}

field::RoughField sheet_field(const Json& params, std::uint64_t seed) {
  const auto hurst = number_list(params.at("hurst"), "hurst");
  const auto nodes = params.contains("nodes") ? number_list(params["nodes"], "nodes") : std::vector<double>(hurst.size(), 65);
  const auto t = params.contains("t") ? number_list(params["t"], "t") : std::vector<double>{0.0, 1.0};
  const auto x = params.contains("x") ? number_list(params["x"], "x") : std::vector<double>{-4.0, 4.0};
  if (hurst.size() < 2 || hurst.size() != nodes.size()) throw UsageError("sheet field needs hurst and nodes for (t, x...)");
  if (t[0] != 0.0 || !(x[0] < 0.0 && x[1] > 0.0)) throw UsageError("sheet axes must start at t=0 and contain x=0");
  std::vector<std::vector<double>> axes{field::linspace(t[0], t[1], static_cast<std::size_t>(nodes[0]))};
  for (std::size_t i = 1; i < hurst.size(); ++i) {
    // symmetric odd node count keeps 0 on the axis
    std::size_t n = static_cast<std::size_t>(nodes[i]);
    if (n % 2 == 0) ++n;
    const double half = std::max(-x[0], x[1]);
    axes.push_back(field::linspace(-half, half, n));
  }
  const gaussian::SheetSample s =
      gaussian::SheetSampler({hurst}, axes).draw(seed, get_or<std::uint64_t>(params, "stream", 0));
  const double scale = get_or(params, "scale", 1.0);
  field::GridArray array = s.as_grid();
  for (double& v : array.values) v *= scale;
  const double h_space = *std::min_element(hurst.begin() + 1, hurst.end());
  field::RoughField raw = field::grid_field("fbs", array, make_profile(hurst[0] - 0.02, h_space - 0.02));
  if (!params.contains("mollify")) return raw;
  const double eps = params["mollify"].get<double>();
  const field::RoughField smooth = field::mollify(raw, eps, {get_or(params, "quadrature_nodes", 5)});
  // Tabulate once so that evaluation is a table lookup.
  const auto table_nodes =
      params.contains("table") ? number_list(params["table"], "table") : std::vector<double>(hurst.size(), 129);
  const auto& dom = smooth.domain();
  std::vector<std::vector<double>> tab{field::linspace(dom.t_lo, dom.t_hi, static_cast<std::size_t>(table_nodes[0]))};
  for (int i = 0; i < dom.dim(); ++i)
    tab.push_back(field::linspace(dom.x_lo(i), dom.x_hi(i), static_cast<std::size_t>(table_nodes[i + 1])));
  return field::grid_field("fbs_mollified", field::tabulate(smooth, tab), make_profile(1.0, 1.0));
}

}  // namespace

field::RoughField field_from_json(const Json& spec, std::uint64_t seed) {
  if (!spec.is_object() || !spec.contains("kind") || !spec["kind"].is_string())
    throw UsageError("field spec needs a string 'kind'");
  for (const auto& [key, value] : spec.items())
    if (key != "kind" && key != "params" && key != "profile" && key != "domain")
      throw UsageError("field spec: unknown key '" + key + "'");
  const std::string kind = spec["kind"].get<std::string>();
  const Json params = spec.value("params", Json::object());
  const int d = get_or(params, "dim", 1);
  if (d < 1 || d > kMaxDim) throw UsageError("field spec: dim out of range");
  const field::Domain dom = domain_from_json(spec, d);
  try {
    if (kind == "linear") {
      const Driver drv = driver_from_json(params.value("driver", Json("identity")), seed);
      const auto prof = profile_from_json(spec, make_profile(drv.tau, 1.0));
      return get_or(params, "scalar", false) ? field::scalar_linear_field(drv.g, dom, prof)
                                             : field::linear_field(drv.g, dom, prof);
    }
    if (kind == "separable") {
      const Driver drv = driver_from_json(params.value("driver", Json("identity")), seed);
      const auto prof = profile_from_json(spec, make_profile(drv.tau, 1.0));
      return field::separable_field(drv.g, spatial_from_name(get_or<std::string>(params, "spatial", "sin")), dom, prof,
                                    drv.g_prime);
    }
    if (kind == "grid") {
      if (!params.contains("file")) throw UsageError("grid field needs params.file");
      const auto array = field::read_grid_csv(params["file"].get<std::string>());
      return field::grid_field("grid", array, profile_from_json(spec, make_profile(1.0, 1.0)));
    }
    if (kind == "sheet") {
      const auto f = sheet_field(params, seed);
      return spec.contains("profile") ? f.with_profile(profile_from_json(spec, f.profile())) : f;
    }
    if (kind == "analytic:drift") {
      const Vec b = params.contains("b") ? to_vec(number_list(params["b"], "b")) : Vec(Vec::Ones(d));
      return field::drift_field(b, domain_from_json(spec, static_cast<int>(b.size())));
    }
    if (kind == "analytic:sine") {
      const Driver drv = driver_from_json(params.value("driver", Json("identity")), seed);
      return field::sine_field(drv.g, dom, profile_from_json(spec, make_profile(drv.tau, 1.0)));
    }
    if (kind == "analytic:rotation") {
      const Driver drv = driver_from_json(params.value("driver", Json("identity")), seed);
      return field::rotation_field(drv.g, domain_from_json(spec, 2), profile_from_json(spec, make_profile(drv.tau, 1.0)));
    }
    if (kind == "analytic:zero") return field::constant_field(scalar_value(0.0), dom);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("field spec: ") + e.what());
  }
  throw UsageError("unknown field kind '" + kind + "'");
}

sewing::Path path_from_spec(const Json& spec, std::uint64_t seed) {
  if (spec.is_string()) {
    const std::string s = spec.get<std::string>();
    if (s.rfind("builtin:", 0) != 0) throw UsageError("path spec must be builtin:<name> or {file}");
    const std::string name = s.substr(8);
    const std::size_t n = 4096;
    const auto times = gaussian::uniform_times(n, 1.0);
    if (name == "identity") return sewing::Path::scalar(times, times, 1.0);
    if (name == "sin") {
      std::vector<double> v;
      for (double t : times) v.push_back(std::sin(t));
      return sewing::Path::scalar(times, v, 1.0);
    }
    if (name.rfind("fbm:", 0) == 0) {
      std::istringstream is(name.substr(4));
      double H = 0.7;
      char sep = 0;
      std::size_t m = n;
      is >> H;
      if (is >> sep && sep == ':') is >> m;
      if (!(H > 0.0 && H < 1.0) || m < 2) throw UsageError("bad fbm path spec '" + s + "'");
      return sewing::Path::scalar(gaussian::uniform_times(m, 1.0), gaussian::fbm_path(H, m, 1.0, seed, 1), H - 0.02);
    }
    throw UsageError("unknown builtin path '" + name + "'");
  }
  if (!spec.is_object() || !spec.contains("file")) throw UsageError("path spec must be builtin:<name> or {file}");
  std::ifstream in(spec["file"].get<std::string>());
  if (!in) throw ArgumentError("cannot open path file " + spec["file"].get<std::string>());
  std::vector<double> times;
  std::vector<Point> values;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() < 2) throw ArgumentError("path file rows need t and at least one coordinate");
    times.push_back(row[0]);
    values.push_back(to_vec(std::vector<double>(row.begin() + 1, row.end())));
  }
  return sewing::Path(times, values, spec.value("gamma", 1.0));
}

}  // namespace rough::cli
