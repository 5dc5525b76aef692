#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "rough/cli/cli.hpp"
#include "rough/core/parallel.hpp"
#include "rough/core/stats.hpp"
#include "rough/field/grid_field.hpp"
#include "rough/fk/fk.hpp"
#include "rough/flow/flow.hpp"
#include "rough/gaussian/fbm.hpp"
#include "rough/gaussian/sheet.hpp"
#include "rough/sewing/young.hpp"
#include "rough/transport/transport.hpp"

namespace rough::cli {
namespace {

struct Table {
  std::string header;
  std::vector<std::vector<double>> rows;
};

/// Mutable state of one run: outputs, verdicts and the CSV tables to write.
struct Report {
  Json outputs = Json::object();
  Json verdicts = Json::array();
  Json plots = Json::object();
  std::vector<std::pair<std::string, Table>> files;
  std::optional<field::GridArray> sample;  ///< written as sample.csv in the grid format

  void verdict(const std::string& name, bool pass, double value, double tolerance) {
    verdicts.push_back({{"name", name}, {"pass", pass}, {"value", value}, {"tolerance", tolerance}});
  }
  void plot(const std::string& kind, const std::vector<std::vector<double>>& rows) {
    Json j = Json::array();
    for (const auto& r : rows) j.push_back(r);
    plots[kind] = j;
  }
};

double num(const Json& p, const char* key, double fallback) { return p.contains(key) ? p[key].get<double>() : fallback; }

std::size_t count(const Json& p, const char* key, std::size_t fallback) {
  return p.contains(key) ? p[key].get<std::size_t>() : fallback;
}

bool flag(const Json& p, const char* key) { return p.contains(key) && p[key].get<bool>(); }

Point point_from(const Json& j, const char* what) {
  if (!j.is_array() || j.empty() || j.size() > static_cast<std::size_t>(kMaxDim))
    throw UsageError(std::string(what) + " must be a non-empty array of numbers");
  Point x(static_cast<int>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw UsageError(std::string(what) + " must hold numbers");
    x(static_cast<int>(i)) = j[i].get<double>();
  }
  return x;
}

std::vector<double> numbers(const Json& j, const char* what) {
  if (!j.is_array()) throw UsageError(std::string(what) + " must be an array");
  std::vector<double> v;
  for (const auto& e : j) {
    if (!e.is_number()) throw UsageError(std::string(what) + " must hold numbers");
    v.push_back(e.get<double>());
  }
  return v;
}

Json vec_json(const Vec& v) {
  Json j = Json::array();
  for (int i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

Json value_json(const Value& v) { return v.size() == 1 ? Json(v(0)) : vec_json(v); }

// ---------------------------------------------------------------- integrate

void integrate(const ExperimentConfig& c, Report& rep) {
  const Json& p = c.params;
  const auto W = field_from_json(p["field"], c.seed);
  const auto path = path_from_spec(p["path"], c.seed);
  const double a = num(p, "a", path.times().front());
  const double b = num(p, "b", path.times().back());
  const std::string endpoint = p.value("endpoint", std::string("left"));
  if (endpoint != "left" && endpoint != "right") throw UsageError("integrate: endpoint must be left or right");
  sewing::YoungOptions yo;
  yo.sew.tol = c.tol.value_or(1e-6);
  yo.sew.max_levels = static_cast<int>(count(p, "levels", 22));
  yo.sew.min_levels = std::min(yo.sew.min_levels, yo.sew.max_levels);
  yo.sew.require_convergence = false;
  const auto r = endpoint == "left" ? sewing::nonlinear_young_integral(W, path, a, b, yo)
                                    : sewing::right_endpoint_integral(W, path, a, b, yo);
  Json trace = Json::array();
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < r.trace.size(); ++k) {
    trace.push_back({r.trace[k].mesh, value_json(r.trace[k].value)});
    const double diff = k == 0 ? std::nan("") : (r.trace[k].value - r.trace[k - 1].value).norm();
    rows.push_back({static_cast<double>(k), r.trace[k].value(0), diff});
  }
  rep.outputs["value"] = value_json(r.value);
  rep.outputs["trace"] = trace;
  rep.outputs["error_estimate"] = r.error_estimate;
  rep.outputs["tolerance"] = yo.sew.tol;
  if (r.theoretical_bound) rep.outputs["theoretical_bound"] = *r.theoretical_bound;
  if (!r.warnings.empty()) rep.outputs["warnings"] = r.warnings;
  rep.verdict("converged", r.converged, r.error_estimate, yo.sew.tol);
  if (p.contains("symmetric_eps")) {
    const auto s = sewing::symmetric_integral_approx(W, path, a, b, p["symmetric_eps"].get<double>());
    rep.outputs["symmetric"] = value_json(s);
    rep.outputs["symmetric_gap"] = (s - r.value).norm();
  }
  rep.plot("convergence", rows);
  rep.files.push_back({"convergence.csv", {"level,value,diff", rows}});
}

// --------------------------------------------------------------------- flow

void flow_cmd(const ExperimentConfig& c, Report& rep) {
  const Json& p = c.params;
  const auto W = field_from_json(p["field"], c.seed);
  const Point x0 = point_from(p["x0"], "flow: x0");
  if (x0.size() != W.dim_in()) throw UsageError("flow: x0 dimension does not match the field");
  const double t0 = num(p, "t0", W.domain().t_lo);
  const double T = num(p, "T", W.domain().t_hi);
  const std::size_t n = std::max<std::size_t>(2, count(p, "steps", 1024));
  const auto sol = flow::solve_rough_ode(W, x0, t0, T, n);
  const int d = W.dim_in();
  rep.outputs["final_state"] = vec_json(sol.final_state());
  rep.outputs["steps"] = sol.step_count;
  rep.outputs["a_priori_bound"] = sol.a_priori_bound;
  rep.outputs["achieved_sup"] = sol.achieved_sup;
  if (!sol.warnings.empty()) rep.outputs["warnings"] = sol.warnings;
  // self-convergence tolerance for the identity checks
  const double tol = 2 * (sol.final_state() - flow::solve_rough_ode(W, x0, t0, T, n / 2).final_state()).norm() + 1e-12;

  std::string header = "t";
  for (int i = 0; i < d; ++i) header += ",phi" + std::to_string(i + 1);
  std::vector<std::vector<double>> rows;
  if (flag(p, "jacobian")) {
    const auto jp = flow::jacobian_path(W, sol);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) header += ",grad" + std::to_string(i + 1) + std::to_string(j + 1);
    header += ",J";
    double inv_gap = 0.0, det_gap = 0.0;
    for (std::size_t k = 0; k < jp.times.size(); ++k) {
      std::vector<double> row{sol.times[k]};
      for (int i = 0; i < d; ++i) row.push_back(sol.states[k](i));
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) row.push_back(jp.matrices[k](i, j));
      row.push_back(jp.dets[k]);
      rows.push_back(row);
      inv_gap = std::max(inv_gap, (jp.matrices[k] * jp.inverses[k] - Mat::Identity(d, d)).norm());
      det_gap = std::max(det_gap, std::abs(jp.dets[k] - jp.exp_div[k]) / std::abs(jp.exp_div[k]));
    }
    Json jac = Json::array();
    for (int i = 0; i < d; ++i) jac.push_back(vec_json(jp.matrices.back().row(i).transpose()));
    rep.outputs["jacobian_final"] = jac;
    rep.outputs["J_final"] = jp.dets.back();
    rep.verdict("grad_phi_M_identity", inv_gap <= 1e-6, inv_gap, 1e-6);
    rep.verdict("det_equals_exp_div", det_gap <= 1e-3, det_gap, 1e-3);
  } else {
    for (std::size_t k = 0; k < sol.times.size(); ++k) {
      std::vector<double> row{sol.times[k]};
      for (int i = 0; i < d; ++i) row.push_back(sol.states[k](i));
      rows.push_back(row);
    }
  }
  if (flag(p, "inverse_check")) {
    const double gap = (flow::inverse_flow(W, sol.final_state(), t0, T, n) - x0).norm();
    rep.verdict("inverse_round_trip", gap <= tol, gap, tol);
  }
  if (p.contains("composition_check")) {
    const double s = p["composition_check"].get<double>();
    if (!((s - t0) * (T - s) > 0)) throw UsageError("flow: composition_check must lie strictly between t0 and T");
    const double frac = (s - t0) / (T - t0);
    const std::size_t n1 = std::max<std::size_t>(2, std::lround(frac * n));
    const std::size_t n2 = std::max<std::size_t>(2, n - std::min(n, n1));
    const auto first = flow::solve_rough_ode(W, x0, t0, s, n1);
    const double gap = (flow::solve_rough_ode(W, first.final_state(), s, T, n2).final_state() - sol.final_state()).norm();
    rep.verdict("composition", gap <= tol, gap, tol);
  }
  rep.files.push_back({"flow.csv", {header, rows}});
}

// ---------------------------------------------------------------- transport

transport::InitialDatum datum_from_name(const std::string& raw) {
  const std::string name = raw.rfind("builtin:", 0) == 0 ? raw.substr(8) : raw;
  if (name == "bump")
    return {[](const Point& x) { return std::exp(-x.squaredNorm()) + 0.25 * std::sin(x.sum()); },
            [](const Point& x) {
              Vec g = -2.0 * x * std::exp(-x.squaredNorm());
              g.array() += 0.25 * std::cos(x.sum());
              return g;
            }};
  if (name == "gauss")
    return {[](const Point& x) { return std::exp(-x.squaredNorm()); },
            [](const Point& x) { return Vec(-2.0 * x * std::exp(-x.squaredNorm())); }};
  if (name == "sin")
    return {[](const Point& x) { return std::sin(x.sum()); },
            [](const Point& x) { return Vec(Vec::Constant(x.size(), std::cos(x.sum()))); }};
  throw UsageError("unknown initial datum '" + raw + "' (bump, gauss, sin)");
}

/// {lo, hi, n} per axis; a scalar lo/hi applies to every axis.
std::vector<std::vector<double>> grid_axes(const Json& g, int d, double lo, double hi, std::size_t n) {
  const double glo = g.contains("lo") && g["lo"].is_number() ? g["lo"].get<double>() : lo;
  const double ghi = g.contains("hi") && g["hi"].is_number() ? g["hi"].get<double>() : hi;
  const std::size_t gn = g.contains("n") ? g["n"].get<std::size_t>() : n;
  if (!(glo < ghi) || gn < 2) throw UsageError("grid needs lo < hi and n >= 2");
  return std::vector<std::vector<double>>(static_cast<std::size_t>(d), field::linspace(glo, ghi, gn));
}

std::vector<Point> tensor_points(const std::vector<std::vector<double>>& axes) {
  std::vector<Point> pts;
  if (axes.size() == 1) {
    for (double x : axes[0]) pts.push_back(make_vec({x}));
  } else {
    for (double x : axes[0])
      for (double y : axes[1]) pts.push_back(make_vec({x, y}));
  }
  return pts;
}

void transport_cmd(const ExperimentConfig& c, Report& rep) {
  const Json& p = c.params;
  const auto W = field_from_json(p["field"], c.seed);
  const int d = W.dim_in();
  if (d > 2) throw UsageError("transport: rasters support d <= 2");
  const auto axes = grid_axes(p.value("grid", Json::object()), d, -2.0, 2.0, d == 1 ? 65 : 33);
  const transport::TransportProblem prob{W, datum_from_name(p.value("h", std::string("bump"))), W.domain().t_lo,
                                         tensor_points(axes)};
  prob.validate();
  const double t = num(p, "t", W.domain().t_hi);
  const std::size_t steps = count(p, "steps", 1024);
  const auto sol = transport::solve_transport(prob, t, steps);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < sol.grid.size(); ++i)
    rows.push_back(d == 1 ? std::vector<double>{sol.grid[i](0), t, sol.values[i]}
                          : std::vector<double>{sol.grid[i](0), sol.grid[i](1), sol.values[i]});
  rep.outputs["t"] = t;
  rep.outputs["nodes"] = sol.grid.size();
  rep.outputs["invalid_nodes"] = sol.invalid_count;
  const double gap = transport::characteristics_gap(prob, t, steps);
  rep.outputs["characteristics_gap"] = gap;
  rep.verdict("characteristics_round_trip", gap <= 1e-6, gap, 1e-6);
  if (p.contains("residual_at")) {
    const Point x = point_from(p["residual_at"], "transport: residual_at");
    const auto rr = transport::transport_residual(prob, x, t);
    rep.outputs["residual"] = {{"x", vec_json(x)},        {"residual", rr.residual}, {"u", rr.u},
                               {"h", rr.h},               {"integral", rr.integral}, {"hx", rr.hx},
                               {"time_cells", rr.time_cells}};
  }
  if (flag(p, "uniqueness")) {
    const auto u = transport::uniqueness_probe(prob, t, 64, 4);
    rep.outputs["uniqueness"] = {{"steps", u.steps}, {"discrepancy", u.discrepancy}, {"monotone", u.monotone}};
    rep.verdict("uniqueness_refinement_decay", u.discrepancy.back() < u.discrepancy.front(), u.discrepancy.back(),
                u.discrepancy.front());
  }
  rep.plot("raster", rows);
  rep.files.push_back({"raster.csv", {d == 1 ? "x,t,u" : "x,y,u", rows}});
}

// ----------------------------------------------------------------------- fk

fk::DiffusionConfig coeffs_from_json(const Json& j, int d) {
  fk::MatrixCoefficient a;
  double lo = 1.0, hi = 1.0;
  bool constant = true;
  const Json ja = j.value("a", Json(1.0));
  if (ja.is_number()) {
    const double s = ja.get<double>();
    if (!(s > 0)) throw UsageError("fk: coefficient a must be positive");
    a = [s, d](double, const Point&) { return Mat(s * Mat::Identity(d, d)); };
    lo = hi = s;
  } else if (ja.is_object() && ja.value("kind", "") == "sin") {
    const double c0 = ja.value("c0", 1.0), c1 = ja.value("c1", 0.2);
    if (!(c0 - std::abs(c1) > 0)) throw UsageError("fk: a = c0 + c1 sin(x1) needs c0 > |c1|");
    a = [c0, c1, d](double, const Point& x) { return Mat((c0 + c1 * std::sin(x(0))) * Mat::Identity(d, d)); };
    lo = c0 - std::abs(c1);
    hi = c0 + std::abs(c1);
    constant = false;
  } else if (ja.is_array()) {
    Mat m(d, d);
    if (ja.size() != static_cast<std::size_t>(d)) throw UsageError("fk: matrix a has the wrong size");
    for (int r = 0; r < d; ++r) {
      const auto row = numbers(ja[r], "fk: a rows");
      if (row.size() != static_cast<std::size_t>(d)) throw UsageError("fk: matrix a has the wrong size");
      for (int k = 0; k < d; ++k) m(r, k) = row[k];
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(m);
    lo = es.eigenvalues().minCoeff();
    hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0)) throw UsageError("fk: matrix a must be positive definite");
    a = [m](double, const Point&) { return m; };
  } else {
    throw UsageError("fk: coefficient a must be a number, {kind: sin} or a matrix");
  }
  fk::VectorCoefficient b;
  double kb = 0.0;
  const Json jb = j.value("b", Json::object({{"kind", "zero"}}));
  if (jb.is_array()) {
    const Vec v = point_from(jb, "fk: b");
    if (v.size() != d) throw UsageError("fk: b has the wrong size");
    b = [v](double, const Point&) { return v; };
    kb = v.norm();
  } else if (jb.is_object() && jb.value("kind", "zero") == "clamped_linear") {
    const double k = jb.value("k", 0.1), clamp = jb.value("clamp", 5.0);
    b = [k, clamp](double, const Point& x) { return Vec(k * x.cwiseMax(-clamp).cwiseMin(clamp)); };
    kb = std::abs(k) * std::max(1.0, clamp);
  } else if (!(jb.is_object() && jb.value("kind", "zero") == "zero")) {
    throw UsageError("fk: drift b must be {kind: zero}, {kind: clamped_linear} or a vector");
  }
  return fk::DiffusionConfig(d, a, b, lo, hi, kb, constant);
}

fk::ScalarFn terminal_from_name(const std::string& raw) {
  const std::string name = raw.rfind("builtin:", 0) == 0 ? raw.substr(8) : raw;
  if (name == "x1") return [](const Point& x) { return x(0); };
  if (name == "sq") return [](const Point& x) { return x.squaredNorm(); };
  if (name == "gauss") return [](const Point& x) { return std::exp(-0.5 * x.squaredNorm()); };
  if (name == "cos") return [](const Point& x) { return std::cos(x.sum()); };
  if (name == "one") return [](const Point&) { return 1.0; };
  throw UsageError("unknown terminal '" + raw + "' (x1, sq, gauss, cos, one)");
}

void fk_cmd(const ExperimentConfig& c, Report& rep) {
  const Json& p = c.params;
  const auto W = field_from_json(p["field"], c.seed);
  const int d = W.dim_in();
  if (W.dim_out() != 1) throw UsageError("fk: the potential must be scalar");
  const auto cfg = coeffs_from_json(p.value("coeffs", Json::object()), d);
  cfg.validate(c.seed);
  const auto uT = terminal_from_name(p.value("terminal", std::string("gauss")));
  const double T = num(p, "T", W.domain().t_hi);
  const Json g = p.value("grid", Json::object());
  const double r = g.value("r", W.domain().t_lo);
  std::vector<fk::FKPoint> pts;
  std::vector<std::vector<double>> axes;
  if (g.contains("points")) {
    for (const auto& x : g["points"]) pts.push_back({r, point_from(x, "fk: grid points")});
  } else {
    if (d > 2) throw UsageError("fk: rasters support d <= 2");
    axes = grid_axes(g, d, -1.0, 1.0, 5);
    for (const auto& x : tensor_points(axes)) pts.push_back({r, x});
  }
  for (const auto& pt : pts)
    if (pt.x.size() != d) throw UsageError("fk: grid point dimension does not match the field");
  const fk::MCConfig mc{count(p, "paths", 10000), count(p, "steps", 64), c.seed, false};
  fk::FKOptions opts;
  opts.sewn = flag(p, "sewn");
  if (c.tol) opts.pathwise.sew.tol = *c.tol;
  const std::string route = p.value("route", std::string("pathwise"));
  if (route == "ito") {
    if (d != 1) throw UsageError("fk: the ito route is available in one dimension");
    double lo = pts.front().x(0), hi = lo;
    for (const auto& pt : pts) lo = std::min(lo, pt.x(0)), hi = std::max(hi, pt.x(0));
    const double reach = 6.0 * std::sqrt(cfg.Lambda() * (T - r)) + cfg.kappa_b() * (T - r) + 0.5;
    const fk::VLattice lattice(W, cfg, T, field::linspace(r, T, 17), {field::linspace(lo - reach, hi + reach, 41)});
    opts.route = fk::Route::ito_trick;
    opts.v = lattice.as_function();
  } else if (route != "pathwise") {
    throw UsageError("fk: route must be pathwise or ito");
  }
  const auto sol = fk::feynman_kac_solve(W, cfg, uT, pts, T, mc, opts);
  std::optional<fk::FDSolution> fd;
  if (flag(p, "fd_check")) {
    fk::FDGrid fg;
    fg.r = r;
    for (int k = 0; k < d; ++k) {
      double lo = pts.front().x(k), hi = lo;
      for (const auto& pt : pts) lo = std::min(lo, pt.x(k)), hi = std::max(hi, pt.x(k));
      fg.axes.push_back(field::linspace(lo - 0.5, hi + 0.5, d == 1 ? 161 : 81));
    }
    fg.time_steps = 400;
    fd = fk::fd_reference_solve(W, cfg, uT, T, fg);
  }
  Json points = Json::array();
  std::vector<std::vector<double>> rows;
  bool stable = true;
  double worst = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& dg = sol.diagnostics[i];
    Json e = {{"r", r},
              {"x", vec_json(pts[i].x)},
              {"u", sol.u[i]},
              {"stderr", sol.std_error[i]},
              {"diagnostics",
               {{"overflow_fraction", dg.overflow_fraction},
                {"max_log_weight", dg.max_log_weight},
                {"mean_integral", dg.mean_integral},
                {"unstable", dg.unstable}}}};
    if (dg.warning) e["diagnostics"]["warning"] = *dg.warning;
    stable = stable && !dg.unstable;
    std::vector<double> row{pts[i].x(0), d == 2 ? pts[i].x(1) : r, sol.u[i]};
    if (fd) {
      const double ref = fd->at(pts[i].x);
      const double tol = std::max(0.02 * std::abs(ref), 3 * sol.std_error[i]);
      e["u_fd"] = ref;
      e["fd_tolerance"] = tol;
      worst = std::max(worst, std::abs(sol.u[i] - ref) / tol);
    }
    points.push_back(e);
    rows.push_back(row);
  }
  rep.outputs["points"] = points;
  rep.outputs["paths"] = mc.n_paths;
  rep.outputs["route"] = route;
  rep.verdict("stable", stable, stable ? 0.0 : 1.0, 0.0);
  if (fd) rep.verdict("fd_agreement", worst <= 1.0, worst, 1.0);
  rep.plot("raster", rows);
  rep.files.push_back({"raster.csv", {d == 2 ? "x,y,u" : "x,r,u", rows}});
}

// -------------------------------------------------------------------- sheet

void sheet_cmd(const ExperimentConfig& c, Report& rep) {
  const Json& p = c.params;
  gaussian::HurstVector h{numbers(p["hurst"], "sheet: hurst")};
  const int d = static_cast<int>(h.dim());
  if (d < 1) throw UsageError("sheet: hurst must be non-empty");
  h.validate();
  const auto axes = grid_axes(p.value("grid", Json::object()), d, 0.0, 1.0, 17);
  const std::size_t draws = std::max<std::size_t>(1, count(p, "draws", 1));
  const std::string check = p.value("check", std::string(""));
  const gaussian::SheetSampler sampler(h, axes);
  const auto samples = sampler.draw_many(c.seed, draws);
  rep.outputs["draws"] = draws;
  rep.outputs["nodes"] = samples.front().values.size();
  rep.sample = samples.front().as_grid();
  const std::vector<double> delta =
      p.contains("delta") ? numbers(p["delta"], "sheet: delta") : std::vector<double>(h.dim(), 0.5);
  if (delta.size() != h.dim()) throw UsageError("sheet: delta needs one entry per axis");
  const double R = num(p, "R", 1.0);
  if (check.empty()) {
  } else if (check == "covariance") {
    // all pairs of axis-diagonal nodes
    Json pairs = Json::array();
    double worst = 0.0;
    const std::size_t n = axes[0].size();
    for (std::size_t i = 1; i < n; i += std::max<std::size_t>(1, n / 4))
      for (std::size_t j = i; j < n; j += std::max<std::size_t>(1, n / 4)) {
        const std::vector<std::size_t> xi(h.dim(), i), yj(h.dim(), j);
        double target = 1.0;
        for (std::size_t k = 0; k < h.dim(); ++k) target *= gaussian::fbm_covariance(h.H[k], axes[k][i], axes[k][j]);
        std::vector<double> prod;
        for (const auto& s : samples) prod.push_back(s.at(xi) * s.at(yj));
        const auto m = sample_moments(prod);
        const double z = m.std_error > 0 ? std::abs(m.mean - target) / m.std_error : 0.0;
        worst = std::max(worst, z);
        pairs.push_back({{"x", axes[0][i]}, {"y", axes[0][j]}, {"empirical", m.mean}, {"target", target}, {"z", z}});
      }
    rep.outputs["covariance"] = pairs;
    rep.verdict("covariance_within_4_stderr", worst <= 4.0, worst, 4.0);
  } else if (check == "increment") {
    Json slopes = Json::array();
    for (std::size_t ax = 0; ax < h.dim(); ++ax) {
      std::vector<double> lx, ly;
      const std::size_t n = axes[ax].size() - 1;
      for (std::size_t k = 1; k <= n; k *= 2) {
        std::vector<double> x(h.dim(), 0.0), y(h.dim());
        for (std::size_t j = 0; j < h.dim(); ++j) y[j] = axes[j].back();
        y[ax] = axes[ax][k];
        const auto m = gaussian::rect_increment_moment_check(samples, x, y);
        lx.push_back(std::log(axes[ax][k]));
        ly.push_back(std::log(m.empirical));
      }
      const double slope = fit_line(lx, ly).slope;
      slopes.push_back(slope);
      rep.verdict("increment_slope_axis" + std::to_string(ax + 1), std::abs(slope - 2 * h.H[ax]) <= 0.1, slope,
                  0.1);
    }
    rep.outputs["increment_slopes"] = slopes;
  } else if (check == "concentration") {
    const std::vector<double> rv = p.contains("r") ? numbers(p["r"], "sheet: r") : std::vector<double>{1, 2, 3};
    const auto cr = gaussian::concentration_check(samples, delta, R, rv);
    std::vector<std::vector<double>> rows;
    Json tail = Json::array();
    for (const auto& row : cr.rows) {
      // the bound column carries the binomial allowance the verdict uses
      rows.push_back({row.r, row.frequency, row.bound + 3 * row.half_width});
      tail.push_back({{"r", row.r},
                      {"frequency", row.frequency},
                      {"bound", row.bound},
                      {"half_width", row.half_width},
                      {"pass", row.pass}});
      rep.verdict("tail_r" + format_double(row.r), row.pass, row.frequency, row.bound + 3 * row.half_width);
    }
    rep.outputs["concentration"] = {{"mean", cr.mean}, {"mean_ci", cr.mean_ci}, {"sigma", cr.sigma}, {"rows", tail}};
    rep.plot("tail", rows);
    rep.files.push_back({"tail.csv", {"r,frequency,bound", rows}});
  } else if (check == "chaining") {
    const double bound = gaussian::chaining_bound(delta, R, h);
    std::vector<double> sups;
    for (const auto& s : samples) sups.push_back(gaussian::empirical_sup_increment(s, delta, R).value);
    const auto m = sample_moments(sups);
    rep.outputs["chaining"] = {{"bound", bound}, {"mean_sup", m.mean}, {"mean_sup_ci", 1.96 * m.std_error}};
    rep.verdict("mean_sup_below_chaining_bound", m.mean <= bound, m.mean, bound);
  } else {
    throw UsageError("sheet: check must be covariance, increment, concentration or chaining");
  }
}

// -------------------------------------------------------------------- suite

void suite_cmd(const ExperimentConfig& c, Report& rep) {
  const std::string name = c.params["name"].get<std::string>();
  if (name != "acceptance") throw UsageError("unknown suite '" + name + "'");
  AcceptanceOptions o;
  o.seed = c.seed;
  o.out = c.out;
  Json crit = Json::array();
  for (const auto& r : run_acceptance(o)) {
    crit.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
    rep.verdict("criterion_" + std::to_string(r.id) + "_" + r.name, r.pass, r.pass ? 1.0 : 0.0, 1.0);
  }
  rep.outputs["criteria"] = crit;
}

void write_table(const std::filesystem::path& file, const Table& t) {
  std::ofstream out(file);
  if (!out) throw ArgumentError("cannot write " + file.string());
  out << "# " << t.header << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << (std::isnan(row[i]) ? "nan" : format_double(row[i]));
    out << "\n";
  }
}

}  // namespace

Envelope run(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  Envelope env;
  Json& body = env.body;
  body["version"] = kVersion;
  body["command"] = config.command;
  body["config"] = config.to_json();
  Report rep;
  std::string status;
  try {
    validate_params(config.command, config.params);
    if (config.threads) set_thread_count(*config.threads);
    if (config.command == "integrate") integrate(config, rep);
    else if (config.command == "flow") flow_cmd(config, rep);
    else if (config.command == "transport") transport_cmd(config, rep);
    else if (config.command == "fk") fk_cmd(config, rep);
    else if (config.command == "sheet") sheet_cmd(config, rep);
    else if (config.command == "suite") suite_cmd(config, rep);
    else throw UsageError("unknown command '" + config.command + "'");
    bool all = true;
    for (const auto& v : rep.verdicts) all = all && v["pass"].get<bool>();
    status = all ? "pass" : "fail";
    env.exit_code = all ? 0 : 1;
  } catch (const UsageError& e) {
    status = "usage_error";
    env.exit_code = 2;
    body["error"] = {{"kind", e.kind()}, {"message", e.what()}};
  } catch (const nlohmann::json::exception& e) {
    status = "usage_error";
    env.exit_code = 2;
    body["error"] = {{"kind", "usage"}, {"message", e.what()}};
  } catch (const Error& e) {
    status = "error";
    env.exit_code = 1;
    body["error"] = {{"kind", e.kind()}, {"message", e.what()}};
  } catch (const std::exception& e) {
    status = "error";
    env.exit_code = 1;
    body["error"] = {{"kind", "internal"}, {"message", e.what()}};
  }
  body["status"] = status;
  body["outputs"] = rep.outputs;
  body["verdicts"] = rep.verdicts;
  body["plots"] = rep.plots;
  body["wall_clock_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!config.out.empty()) {
    try {
      namespace fs = std::filesystem;
      fs::create_directories(config.out);
      for (const auto& [name, table] : rep.files) write_table(fs::path(config.out) / name, table);
      if (rep.sample) field::write_grid_csv((fs::path(config.out) / "sample.csv").string(), *rep.sample);
      std::ofstream(fs::path(config.out) / "envelope.json") << body.dump(2) << "\n";
    } catch (const std::exception& e) {
      body["error"] = {{"kind", "io"}, {"message", e.what()}};
      body["status"] = "error";
      env.exit_code = 1;
    }
  }
  return env;
}

PlotKind plot_kind_from_string(const std::string& s) {
  if (s == "convergence") return PlotKind::convergence;
  if (s == "raster") return PlotKind::raster;
  if (s == "tail") return PlotKind::tail;
  throw ArgumentError("unknown plot kind '" + s + "' (convergence, raster, tail)");
}

std::size_t emit_plot_data(const Json& envelope, PlotKind kind, const std::string& path) {
  static const char* names[] = {"convergence", "raster", "tail"};
  static const char* headers[] = {"level,value,diff", "x,y,u", "r,frequency,bound"};
  const int k = static_cast<int>(kind);
  if (!envelope.contains("plots") || !envelope["plots"].contains(names[k]))
    throw ArgumentError(std::string("envelope carries no ") + names[k] + " table");
  Table t{headers[k], {}};
  for (const auto& row : envelope["plots"][names[k]]) {
    std::vector<double> r;
    for (const auto& v : row) r.push_back(v.is_number() ? v.get<double>() : std::nan(""));
    t.rows.push_back(r);
  }
  write_table(path, t);
  return t.rows.size();
}

namespace {

/// Reads @file, otherwise parses JSON, falling back to a comma list of numbers
/// or a bare string.
Json flag_json(const std::string& raw) {
  std::string text = raw;
  if (!raw.empty() && raw[0] == '@') {
    std::ifstream in(raw.substr(1));
    if (!in) throw UsageError("cannot read " + raw.substr(1));
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  Json j = Json::parse(text, nullptr, false);
  if (!j.is_discarded()) return j;
  if (text.find(',') != std::string::npos) {
    Json arr = Json::array();
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(item, &used);
        if (used != item.size()) throw UsageError("bad list item '" + item + "'");
        arr.push_back(v);
      } catch (const std::logic_error&) {
        throw UsageError("bad list item '" + item + "'");
      }
    }
    return arr;
  }
  return text;
}

}  // namespace

int main_entry(int argc, char** argv) {
  CLI::App app{"Nonlinear Young integration, rough flows, transport, Feynman-Kac and fractional Brownian sheets"};
  app.set_version_flag("--version", kVersion);
  std::string config_file, out;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<std::size_t> threads;
  app.fallthrough();
  app.add_option("--config", config_file, "experiment config JSON (command, params, seed, out, tol, threads)");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--tol", tol, "sewing tolerance override");
  app.add_option("--out", out, "output directory for envelope.json and CSV tables");
  app.add_option("--threads", threads, "worker cap (also ROUGH_YOUNG_THREADS)");

  // command name -> (flag, param key)
  struct Flag {
    const char* flag;
    const char* key;
    bool boolean = false;
  };
  const std::vector<std::pair<std::string, std::vector<Flag>>> specs{
      {"integrate",
       {{"--field", "field"}, {"--path", "path"}, {"--a", "a"}, {"--b", "b"}, {"--levels", "levels"},
        {"--endpoint", "endpoint"}, {"--symmetric-eps", "symmetric_eps"}}},
      {"flow",
       {{"--field", "field"}, {"--x0", "x0"}, {"--t0", "t0"}, {"--T", "T"}, {"--steps", "steps"},
        {"--jacobian", "jacobian", true}, {"--inverse-check", "inverse_check", true},
        {"--composition-check", "composition_check"}}},
      {"transport",
       {{"--field", "field"}, {"--h", "h"}, {"--t", "t"}, {"--grid", "grid"}, {"--steps", "steps"},
        {"--residual-at", "residual_at"}, {"--uniqueness", "uniqueness", true}}},
      {"fk",
       {{"--field", "field"}, {"--coeffs", "coeffs"}, {"--terminal", "terminal"}, {"--grid", "grid"}, {"--T", "T"},
        {"--paths", "paths"}, {"--steps", "steps"}, {"--route", "route"}, {"--sewn", "sewn", true},
        {"--fd-check", "fd_check", true}}},
      {"sheet",
       {{"--hurst", "hurst"}, {"--grid", "grid"}, {"--draws", "draws"}, {"--check", "check"}, {"--delta", "delta"},
        {"--R", "R"}, {"--r", "r"}}},
      {"suite", {}},
  };
  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, std::map<std::string, bool>> switches;
  std::string suite_name;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, flags] : specs) {
    CLI::App* sub = app.add_subcommand(name, name + " experiment");
    subs[name] = sub;
    sub->set_help_flag("--help", "print help for " + name);  // -h would clash with transport --h
    for (const auto& f : flags) {
      if (f.boolean)
        sub->add_flag(f.flag, switches[name][f.key]);
      else
        sub->add_option(f.flag, values[name][f.key]);
    }
    if (name == "suite") sub->add_option("name", suite_name, "suite name (acceptance)");
  }
  app.require_subcommand(0, 1);
  static const std::set<std::string> array_keys{"x0", "residual_at", "hurst", "delta", "r"};

  auto emit = [](const Json& body) { std::cout << body.dump(2) << std::endl; };
  auto usage = [&](const std::string& msg) {
    Json body;
    body["version"] = kVersion;
    body["status"] = "usage_error";
    body["error"] = {{"kind", "usage"}, {"message", msg}};
    emit(body);
    return 2;
  };
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return usage(e.what());
  }

  try {
    Json j = Json::object();
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) throw UsageError("cannot read config " + config_file);
      j = Json::parse(in);
    }
    for (const auto& [name, sub] : subs) {
      if (!sub->parsed()) continue;
      j["command"] = name;
      if (!j.contains("params") || !j["params"].is_object()) j["params"] = Json::object();
      for (const auto& [key, raw] : values[name]) {
        if (raw.empty()) continue;
        Json v = flag_json(raw);
        if (v.is_number() && array_keys.count(key)) v = Json::array({v});
        j["params"][key] = v;
      }
      for (const auto& [key, on] : switches[name])
        if (on) j["params"][key] = true;
      if (name == "suite" && !suite_name.empty()) j["params"]["name"] = suite_name;
    }
    if (seed) j["seed"] = *seed;
    if (tol) j["tol"] = *tol;
    if (threads) j["threads"] = *threads;
    if (!out.empty()) j["out"] = out;
    const auto cfg = ExperimentConfig::from_json(j);
    const auto env = run(cfg);
    emit(env.body);
    return env.exit_code;
  } catch (const UsageError& e) {
    return usage(e.what());
  } catch (const nlohmann::json::exception& e) {
    return usage(e.what());
  }
}

}  // namespace rough::cli
