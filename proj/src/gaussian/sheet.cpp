#include "rough/gaussian/sheet.hpp"

#include <Eigen/Cholesky>
#include <boost/math/quadrature/exp_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

#include "rough/core/errors.hpp"
#include "rough/core/parallel.hpp"
#include "rough/core/rng.hpp"
#include "rough/core/stats.hpp"
#include "rough/gaussian/fbm.hpp"
#include "rough/simd/kernels.hpp"

namespace rough::gaussian {

void HurstVector::validate() const {
  if (H.empty()) throw ArgumentError("HurstVector: empty");
  for (double h : H) {
    if (!(h > 0.0 && h < 1.0)) throw ArgumentError("HurstVector: every exponent must lie in (0,1)");
  }
}

double SheetSample::at(const std::vector<std::size_t>& index) const {
  std::size_t f = 0;
  for (std::size_t k = 0; k < axes.size(); ++k) f = f * axes[k].size() + index[k];
  return values[f];
}

SheetSampler::SheetSampler(HurstVector hurst, std::vector<std::vector<double>> axes)
    : hurst_(std::move(hurst)), axes_(std::move(axes)) {
  hurst_.validate();
  if (axes_.size() != hurst_.dim()) throw ArgumentError("SheetSampler: one axis per Hurst exponent");
  std::size_t total = 1;
  for (const auto& axis : axes_) {
    if (axis.size() < 2) throw ArgumentError("SheetSampler: every axis needs >= 2 nodes");
    for (std::size_t i = 1; i < axis.size(); ++i) {
      if (!(axis[i] > axis[i - 1])) throw ArgumentError("SheetSampler: axis nodes must increase strictly");
    }
    if (std::find(axis.begin(), axis.end(), 0.0) == axis.end()) {
      throw ArgumentError("SheetSampler: every axis must contain 0");
    }
    total *= axis.size();
  }
  if (total > 1000000) throw ArgumentError("SheetSampler: grid exceeds 10^6 nodes");

  for (std::size_t a = 0; a < axes_.size(); ++a) {
    std::vector<std::size_t> nz;
    for (std::size_t i = 0; i < axes_[a].size(); ++i) {
      if (axes_[a][i] != 0.0) nz.push_back(i);
    }
    const auto m = static_cast<Eigen::Index>(nz.size());
    Eigen::MatrixXd cov(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) cov(i, j) = fbm_covariance(hurst_.H[a], axes_[a][nz[i]], axes_[a][nz[j]]);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("SheetSampler: Cholesky factorisation failed on axis " + std::to_string(a));
    }
    const Eigen::MatrixXd L = llt.matrixL();
    std::vector<double> rowmajor(static_cast<std::size_t>(m * m));
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) rowmajor[static_cast<std::size_t>(i * m + j)] = j <= i ? L(i, j) : 0.0;
    }
    nonzero_.push_back(std::move(nz));
    factors_.push_back(std::move(rowmajor));
  }
}

SheetSample SheetSampler::draw(std::uint64_t seed, std::uint64_t stream) const {
  const std::size_t d = axes_.size();
  std::vector<std::size_t> m(d);
  std::size_t reduced = 1;
  for (std::size_t a = 0; a < d; ++a) {
    m[a] = nonzero_[a].size();
    reduced *= m[a];
  }
  std::vector<double> cur(reduced), next(reduced);
  NormalStream normal(seed, stream);
  for (double& v : cur) v = normal.next();

  for (std::size_t a = 0; a < d; ++a) {
    std::size_t pre = 1, post = 1;
    for (std::size_t j = 0; j < a; ++j) pre *= m[j];
    for (std::size_t j = a + 1; j < d; ++j) post *= m[j];
    const std::size_t block = m[a] * post;
    for (std::size_t p = 0; p < pre; ++p) {
      simd::lower_tri_apply(factors_[a], m[a], std::span<const double>(cur.data() + p * block, block), post,
                            std::span<double>(next.data() + p * block, block));
    }
    std::swap(cur, next);
  }

  SheetSample s;
  s.axes = axes_;
  s.hurst = hurst_;
  s.seed = seed;
  s.stream = stream;
  std::size_t total = 1;
  for (const auto& axis : axes_) total *= axis.size();
  s.values.assign(total, 0.0);
  // Scatter the reduced array into the full grid.
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t r = 0; r < reduced; ++r) {
    std::size_t rest = r, flat = 0;
    for (std::size_t a = d; a-- > 0;) {
      idx[a] = nonzero_[a][rest % m[a]];
      rest /= m[a];
    }
    for (std::size_t a = 0; a < d; ++a) flat = flat * axes_[a].size() + idx[a];
    s.values[flat] = cur[r];
  }
  return s;
}

std::vector<SheetSample> SheetSampler::draw_many(std::uint64_t seed, std::size_t count) const {
  std::vector<SheetSample> out(count);
  parallel_for(count, [&](std::size_t i) { out[i] = draw(seed, i); });
  return out;
}

SheetSample sample_fbs(const HurstVector& hurst, const std::vector<std::vector<double>>& axes,
                       std::uint64_t seed) {
  return SheetSampler(hurst, axes).draw(seed, 0);
}

std::size_t node_index(const std::vector<double>& axis, double value) {
  auto it = std::lower_bound(axis.begin(), axis.end(), value);
  if (it != axis.end() && std::fabs(*it - value) <= 1e-12 * (1.0 + std::fabs(value))) {
    return static_cast<std::size_t>(it - axis.begin());
  }
  if (it != axis.begin() && std::fabs(*(it - 1) - value) <= 1e-12 * (1.0 + std::fabs(value))) {
    return static_cast<std::size_t>(it - axis.begin()) - 1;
  }
  throw ArgumentError("point coordinate " + std::to_string(value) + " is not a grid node");
}

double sheet_rect_increment(const SheetSample& s, const std::vector<std::size_t>& x,
                            const std::vector<std::size_t>& y) {
  const std::size_t d = s.axes.size();
  double total = 0.0;
  std::vector<std::size_t> corner(d);
  for (unsigned mask = 0; mask < (1u << d); ++mask) {
    int from_x = 0;
    for (std::size_t j = 0; j < d; ++j) {
      const bool bit = (mask >> j) & 1u;
      corner[j] = bit ? x[j] : y[j];
      from_x += bit ? 1 : 0;
    }
    total += (from_x % 2 == 0 ? 1.0 : -1.0) * s.at(corner);
  }
  return total;
}

MomentReport rect_increment_moment_check(const std::vector<SheetSample>& samples,
                                         const std::vector<double>& x, const std::vector<double>& y) {
  if (samples.size() < 2) throw ArgumentError("rect_increment_moment_check: need >= 2 samples");
  const auto& ref = samples.front();
  const std::size_t d = ref.axes.size();
  if (x.size() != d || y.size() != d) throw ArgumentError("rect_increment_moment_check: dimension mismatch");
  std::vector<std::size_t> xi(d), yi(d);
  MomentReport r;
  r.target = 1.0;
  for (std::size_t a = 0; a < d; ++a) {
    xi[a] = node_index(ref.axes[a], x[a]);
    yi[a] = node_index(ref.axes[a], y[a]);
    r.target *= std::pow(std::fabs(x[a] - y[a]), 2.0 * ref.hurst.H[a]);
  }
  std::vector<double> sq(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double inc = sheet_rect_increment(samples[i], xi, yi);
    sq[i] = inc * inc;
  }
  const SampleMoments mom = sample_moments(sq);
  r.empirical = mom.mean;
  r.std_error = mom.std_error;
  r.z = r.std_error > 0.0 ? (r.empirical - r.target) / r.std_error : 0.0;
  return r;
}

SupReport empirical_sup_increment(const SheetSample& sample, const std::vector<double>& delta, double R,
                                  SupMetric metric) {
  const std::size_t d = sample.axes.size();
  if (delta.size() != d) throw ArgumentError("empirical_sup_increment: one delta per axis");
  for (double v : delta) {
    if (!(v > 0.0)) throw ArgumentError("empirical_sup_increment: delta must be positive");
  }
  if (!(R > 0.0)) throw ArgumentError("empirical_sup_increment: R must be positive");

  // Per axis: admissible nodes and, for each, the admissible forward partners.
  auto dist = [&](std::size_t a, double v) {
    return metric == SupMetric::intrinsic ? std::pow(std::fabs(v), sample.hurst.H[a]) : std::fabs(v);
  };
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> pairs(d);  // (i, j) with j >= i
  for (std::size_t a = 0; a < d; ++a) {
    const auto& axis = sample.axes[a];
    for (std::size_t i = 0; i < axis.size(); ++i) {
      if (dist(a, axis[i]) > R) continue;
      for (std::size_t j = i; j < axis.size(); ++j) {
        if (dist(a, axis[j]) > R) continue;
        if (dist(a, axis[j] - axis[i]) > delta[a]) break;
        pairs[a].emplace_back(i, j);
      }
    }
  }

  SupReport report;
  std::vector<std::size_t> cursor(d, 0), x(d), y(d);
  for (const auto& p : pairs) {
    if (p.empty()) {
      report.warning = "empty admissible set";
      return report;
    }
  }
  // Odometer over the product of per-axis pair lists.
  while (true) {
    bool degenerate = false;
    for (std::size_t a = 0; a < d; ++a) {
      x[a] = pairs[a][cursor[a]].first;
      y[a] = pairs[a][cursor[a]].second;
      degenerate = degenerate || x[a] == y[a];
    }
    if (!degenerate) {
      ++report.admissible_pairs;
      report.value = std::max(report.value, std::fabs(sheet_rect_increment(sample, x, y)));
    }
    std::size_t a = d;
    while (a-- > 0) {
      if (++cursor[a] < pairs[a].size()) break;
      cursor[a] = 0;
    }
    if (a == std::numeric_limits<std::size_t>::max()) break;
  }
  if (report.admissible_pairs == 0) report.warning = "empty admissible set: delta below the grid spacing";
  return report;
}

double sup_scale(const HurstVector& hurst, const std::vector<double>& delta, SupMetric metric) {
  double s = 1.0;
  for (std::size_t i = 0; i < delta.size(); ++i) {
    s *= metric == SupMetric::intrinsic ? delta[i] : std::pow(delta[i], hurst.H[i]);
  }
  return s;
}

double chaining_modulus(double hurst, double delta) {
  if (!(hurst > 0.0 && hurst < 1.0)) throw ArgumentError("chaining_modulus: Hurst exponent must lie in (0,1)");
  if (!(delta > 0.0 && delta <= 1.0)) throw ArgumentError("chaining_modulus: delta must lie in (0,1]");
  const double log_inv_u0 = -std::log(delta) / hurst;  // log(1/u0), u0 = delta^{1/H}
  const double v0 = std::sqrt(log_inv_u0);
  boost::math::quadrature::exp_sinh<double> integrator;
  double error = 0.0;
  const double integral = integrator.integrate(
      [hurst, v0](double w) {
        const double v = v0 + w;
        return 2.0 * std::exp(-hurst * v * v);
      },
      1e-13, &error);
  if (!std::isfinite(integral) || error > 1e-9 * (1.0 + std::fabs(integral))) {
    throw NumericalError("chaining_modulus: quadrature did not converge");
  }
  return delta * v0 + integral;
}

double chaining_bound(const std::vector<double>& delta, double R, const HurstVector& hurst,
                      const ChainingConstants& constants) {
  hurst.validate();
  if (delta.size() != hurst.dim()) throw ArgumentError("chaining_bound: one delta per Hurst exponent");
  double prod_delta = 1.0, log_volume = 0.0;
  for (std::size_t i = 0; i < delta.size(); ++i) {
    if (!(delta[i] > 0.0 && delta[i] <= 1.0)) throw ArgumentError("chaining_bound: delta must lie in (0,1]");
    prod_delta *= delta[i];
    log_volume += std::log(2.0) + std::log(R) / hurst.H[i];
  }
  if (!(R > 0.0) || !(log_volume > 0.0)) throw ArgumentError("chaining_bound: need prod 2 R^{1/H_i} > 1");
  double modulus = 0.0;
  for (std::size_t i = 0; i < delta.size(); ++i) {
    double others = 1.0;
    for (std::size_t j = 0; j < delta.size(); ++j) {
      if (j != i) others *= delta[j];
    }
    modulus += others * chaining_modulus(hurst.H[i], delta[i]);
  }
  return constants.entropy * prod_delta * std::sqrt(log_volume) + constants.modulus * modulus;
}

namespace {

double wilson_half_width(double p, double n) {
  const double z = 1.96;
  const double denom = 1.0 + z * z / n;
  return z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
}

}  // namespace

ConcentrationReport concentration_check(const std::vector<double>& sup_values, double sigma,
                                        const std::vector<double>& r_values) {
  if (sup_values.size() < 500) throw ArgumentError("concentration_check: need >= 500 samples");
  if (!(sigma > 0.0)) throw ArgumentError("concentration_check: sigma must be positive");
  const SampleMoments mom = sample_moments(sup_values);
  ConcentrationReport rep;
  rep.mean = mom.mean;
  rep.mean_ci = 1.96 * mom.std_error;
  rep.sigma = sigma;
  rep.samples = sup_values.size();
  rep.pass = true;
  const double n = static_cast<double>(sup_values.size());
  for (double r : r_values) {
    std::size_t exceed = 0;
    for (double v : sup_values) {
      if (std::fabs(v - mom.mean) / sigma > r) ++exceed;
    }
    TailRow row;
    row.r = r;
    row.frequency = static_cast<double>(exceed) / n;
    row.bound = 2.0 * std::exp(-0.5 * r * r);
    row.half_width = wilson_half_width(row.frequency, n);
    row.pass = row.frequency <= row.bound + 3.0 * row.half_width;
    rep.pass = rep.pass && row.pass;
    rep.rows.push_back(row);
  }
  return rep;
}

ConcentrationReport concentration_check(const std::vector<SheetSample>& samples,
                                        const std::vector<double>& delta, double R,
                                        const std::vector<double>& r_values, SupMetric metric) {
  if (samples.empty()) throw ArgumentError("concentration_check: no samples");
  std::vector<double> sups(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    sups[i] = empirical_sup_increment(samples[i], delta, R, metric).value;
  });
  return concentration_check(sups, sup_scale(samples.front().hurst, delta, metric), r_values);
}

MkResult mk_average(const SheetSample& sample, const std::vector<int>& k, const std::vector<double>& t,
                    const std::vector<double>& D) {
  const std::size_t d = sample.axes.size();
  if (k.size() != d || t.size() != d) throw ArgumentError("mk_average: dimension mismatch");
  if (!D.empty() && D.size() != d) throw ArgumentError("mk_average: one D per axis");

  // Per axis: nodes inside the metric ball, with dual-cell widths.
  std::vector<std::vector<std::pair<std::size_t, double>>> inside(d);
  for (std::size_t a = 0; a < d; ++a) {
    const auto& axis = sample.axes[a];
    const double h = sample.hurst.H[a];
    double extent = 0.0;
    for (double u : axis) extent = std::max(extent, std::pow(std::fabs(u), h));
    const double radius = (D.empty() ? extent : D[a]) * std::ldexp(1.0, -k[a]);
    for (std::size_t i = 0; i < axis.size(); ++i) {
      if (std::pow(std::fabs(axis[i] - t[a]), h) > radius) continue;
      const double left = i > 0 ? 0.5 * (axis[i] - axis[i - 1]) : 0.0;
      const double right = i + 1 < axis.size() ? 0.5 * (axis[i + 1] - axis[i]) : 0.0;
      inside[a].emplace_back(i, left + right);
    }
  }
  MkResult out;
  for (const auto& v : inside) {
    if (v.empty()) {
      std::vector<std::size_t> nearest(d);
      for (std::size_t a = 0; a < d; ++a) {
        const auto& axis = sample.axes[a];
        std::size_t best = 0;
        for (std::size_t i = 1; i < axis.size(); ++i) {
          if (std::fabs(axis[i] - t[a]) < std::fabs(axis[best] - t[a])) best = i;
        }
        nearest[a] = best;
      }
      out.value = sample.at(nearest);
      out.nodes = 1;
      out.warning = "empty ball: radius below the grid spacing, nearest node used";
      return out;
    }
  }
  std::vector<std::size_t> cursor(d, 0), idx(d);
  double mass = 0.0, acc = 0.0;
  while (true) {
    double w = 1.0;
    for (std::size_t a = 0; a < d; ++a) {
      idx[a] = inside[a][cursor[a]].first;
      w *= inside[a][cursor[a]].second;
    }
    mass += w;
    acc += w * sample.at(idx);
    ++out.nodes;
    std::size_t a = d;
    while (a-- > 0) {
      if (++cursor[a] < inside[a].size()) break;
      cursor[a] = 0;
    }
    if (a == std::numeric_limits<std::size_t>::max()) break;
  }
  out.value = acc / mass;
  return out;
}

double mk_rect_increment(const SheetSample& sample, const std::vector<int>& k, const std::vector<double>& s,
                         const std::vector<double>& t, const std::vector<double>& D) {
  const std::size_t d = sample.axes.size();
  double total = 0.0;
  std::vector<double> corner(d);
  for (unsigned mask = 0; mask < (1u << d); ++mask) {
    int from_s = 0;
    for (std::size_t j = 0; j < d; ++j) {
      const bool bit = (mask >> j) & 1u;
      corner[j] = bit ? s[j] : t[j];
      from_s += bit ? 1 : 0;
    }
    total += (from_s % 2 == 0 ? 1.0 : -1.0) * mk_average(sample, k, corner, D).value;
  }
  return total;
}

}  // namespace rough::gaussian
