#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "rbm/adjacency.hpp"
#include "rbm/ensemble.hpp"

namespace rbm {

/// Root-mean-square particle-wise distance between two coupled ensembles,
/// sqrt(1/N sum_i |a_i - b_i|^2). Velocities contribute when both carry them.
template <class Scalar>
Scalar trajectory_error(const ParticleEnsemble<Scalar>& a, const ParticleEnsemble<Scalar>& b) {
  if (a.size() != b.size() || a.dim() != b.dim())
    throw std::invalid_argument("trajectory_error: ensemble shapes differ");
  if (a.size() == 0) throw std::invalid_argument("trajectory_error: empty ensembles");
  Scalar sum = (a.positions - b.positions).squaredNorm();
  if (a.velocities.has_value() != b.velocities.has_value())
    throw std::invalid_argument("trajectory_error: only one ensemble carries velocities");
  if (a.velocities) sum += (*a.velocities - *b.velocities).squaredNorm();
  return std::sqrt(sum / static_cast<Scalar>(a.size()));
}

/// Exact order-p Wasserstein distance between two 1-D empirical measures,
/// by integrating |F^{-1}(u) - G^{-1}(u)|^p over u. Equal sizes reduce to
/// the mean over matched order statistics.
inline double wasserstein_1d(std::span<const double> a, std::span<const double> b, int order = 1) {
  if (a.empty() || b.empty()) throw std::invalid_argument("wasserstein_1d: empty sample");
  if (order != 1 && order != 2) throw std::invalid_argument("wasserstein_1d: order must be 1 or 2");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  auto cost = [order](double d) { return order == 1 ? std::abs(d) : d * d; };
  double total = 0;
  if (x.size() == y.size()) {
    for (std::size_t k = 0; k < x.size(); ++k) total += cost(x[k] - y[k]);
    total /= static_cast<double>(x.size());
  } else {
    const double n = static_cast<double>(x.size());
    const double m = static_cast<double>(y.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double u = 0;
    while (i < x.size() && j < y.size()) {
      const double next = std::min(static_cast<double>(i + 1) / n, static_cast<double>(j + 1) / m);
      total += (next - u) * cost(x[i] - y[j]);
      u = next;
      if (static_cast<double>(i + 1) / n <= u) ++i;
      if (static_cast<double>(j + 1) / m <= u) ++j;
    }
  }
  return order == 1 ? total : std::sqrt(total);
}

/// Law quantiles at the midpoints (k - 1/2)/n, k = 1..n.
inline std::vector<double> midpoint_quantiles(std::size_t n, const std::function<double(double)>& quantile) {
  std::vector<double> q(n);
  for (std::size_t k = 0; k < n; ++k) q[k] = quantile((static_cast<double>(k) + 0.5) / static_cast<double>(n));
  return q;
}

/// Order-p distance between samples and a law given by its midpoint
/// quantiles (ascending, one per sample).
inline double wasserstein_to_quantiles(std::span<const double> samples, std::span<const double> quantiles,
                                       int order = 1) {
  if (samples.empty()) throw std::invalid_argument("wasserstein_to_quantiles: empty sample");
  if (samples.size() != quantiles.size())
    throw std::invalid_argument("wasserstein_to_quantiles: need one quantile per sample");
  if (order != 1 && order != 2) throw std::invalid_argument("wasserstein_to_quantiles: order must be 1 or 2");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  double total = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = x[k] - quantiles[k];
    total += order == 1 ? std::abs(d) : d * d;
  }
  total /= static_cast<double>(x.size());
  return order == 1 ? total : std::sqrt(total);
}

/// Order-p distance between samples and a continuous law given by its
/// quantile function, evaluated at the midpoints (k - 1/2)/n.
inline double wasserstein_to_law(std::span<const double> samples, const std::function<double(double)>& quantile,
                                 int order = 1) {
  if (samples.empty()) throw std::invalid_argument("wasserstein_to_law: empty sample");
  const auto q = midpoint_quantiles(samples.size(), quantile);
  return wasserstein_to_quantiles(samples, q, order);
}

/// Inverts a continuous nondecreasing CDF on [lo, hi] by bisection.
inline double invert_cdf(const std::function<double(double)>& cdf, double u, double lo, double hi) {
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo) + std::abs(hi)); ++it) {
    const double mid = lo + (hi - lo) / 2;
    if (cdf(mid) < u)
      lo = mid;
    else
      hi = mid;
  }
  return lo + (hi - lo) / 2;
}

// ---------------------------------------------------------------------------
// Dyson reference laws

/// sigma(t) = 1 + exp(-2t); the density is a semicircle of radius sqrt(2 sigma).
inline double dyson_sigma(double t) { return 1 + std::exp(-2 * t); }

/// rho(x, t) = sqrt(2 sigma(t) - x^2) / (sigma(t) pi); t = +inf gives the
/// equilibrium semicircle sqrt(2 - x^2) / pi.
inline double density_dyson(double x, double t) {
  if (t < 0) throw std::invalid_argument("density_dyson: t must be >= 0");
  const double s = std::isinf(t) ? 1.0 : dyson_sigma(t);
  const double r2 = 2 * s - x * x;
  return r2 > 0 ? std::sqrt(r2) / (s * std::numbers::pi) : 0.0;
}

/// CDF of a centred semicircle law of radius R.
inline double semicircle_cdf(double x, double radius) {
  if (x <= -radius) return 0;
  if (x >= radius) return 1;
  const double r2 = radius * radius;
  return 0.5 + (x * std::sqrt(r2 - x * x) + r2 * std::asin(x / radius)) / (std::numbers::pi * r2);
}

inline double dyson_quantile(double u, double t) {
  const double radius = std::sqrt(2 * (std::isinf(t) ? 1.0 : dyson_sigma(t)));
  return invert_cdf([radius](double x) { return semicircle_cdf(x, radius); }, u, -radius, radius);
}

// ---------------------------------------------------------------------------
// Inverse-Gamma equilibrium of the wealth model

/// Regularized lower incomplete gamma P(a, x): series below a+1, Lentz
/// continued fraction for the complement above.
inline double regularized_gamma_p(double a, double x) {
  if (!(a > 0)) throw std::invalid_argument("regularized_gamma_p: a must be > 0");
  if (x <= 0) return 0;
  const double log_prefactor = a * std::log(x) - x - std::lgamma(a);
  if (x < a + 1) {
    double term = 1 / a;
    double sum = term;
    for (int k = 1; k < 1000; ++k) {
      term *= x / (a + k);
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-17) break;
    }
    return std::exp(log_prefactor) * sum;
  }
  constexpr double tiny = 1e-300;
  double b = x + 1 - a;
  double c = 1 / tiny;
  double d = 1 / b;
  double h = d;
  for (int k = 1; k < 1000; ++k) {
    const double an = -k * (k - a);
    b += 2;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1) < 1e-16) break;
  }
  return 1 - std::exp(log_prefactor) * h;
}

namespace detail {
inline void check_inverse_gamma(double kappa, double diffusion, double eta) {
  if (!(kappa > 0 && diffusion > 0 && eta > 0))
    throw std::invalid_argument("inverse-gamma law needs kappa, D, eta > 0");
}
}  // namespace detail

/// Equilibrium wealth density
/// ((k eta/D)^{k/D+1} / Gamma(k/D+1)) y^{-(2+k/D)} exp(-k eta/(D y)) on y > 0.
inline double density_inverse_gamma(double y, double kappa, double diffusion, double eta) {
  detail::check_inverse_gamma(kappa, diffusion, eta);
  if (y <= 0) return 0;
  const double shape = kappa / diffusion + 1;
  const double scale = kappa * eta / diffusion;
  return std::exp(shape * std::log(scale) - std::lgamma(shape) - (shape + 1) * std::log(y) - scale / y);
}

inline double inverse_gamma_cdf(double y, double kappa, double diffusion, double eta) {
  detail::check_inverse_gamma(kappa, diffusion, eta);
  if (y <= 0) return 0;
  const double shape = kappa / diffusion + 1;
  const double scale = kappa * eta / diffusion;
  return 1 - regularized_gamma_p(shape, scale / y);
}

inline double inverse_gamma_quantile(double u, double kappa, double diffusion, double eta) {
  detail::check_inverse_gamma(kappa, diffusion, eta);
  if (!(u > 0 && u < 1)) throw std::invalid_argument("inverse_gamma_quantile: u must be in (0, 1)");
  const double shape = kappa / diffusion + 1;
  const double scale = kappa * eta / diffusion;
  // y = scale / x with P(shape, x) = 1 - u; bracket x, then bisect in log space.
  double hi = std::max(1.0, shape);
  while (regularized_gamma_p(shape, hi) < 1 - u) hi *= 2;
  double lo = hi;
  while (lo > 1e-300 && regularized_gamma_p(shape, lo) > 1 - u) lo /= 2;
  double llo = std::log(lo);
  double lhi = std::log(hi);
  for (int it = 0; it < 200 && lhi - llo > 1e-15; ++it) {
    const double mid = (llo + lhi) / 2;
    if (regularized_gamma_p(shape, std::exp(mid)) < 1 - u)
      llo = mid;
    else
      lhi = mid;
  }
  return scale / std::exp((llo + lhi) / 2);
}

// ---------------------------------------------------------------------------
// Histograms

struct Histogram {
  std::vector<double> edges;
  std::vector<double> counts;
  bool normalized = false;

  std::size_t bins() const noexcept { return counts.size(); }
  double width(std::size_t k) const { return edges[k + 1] - edges[k]; }
};

/// Equal-width histogram over [lo, hi]; values outside are dropped. With
/// `density` the bin values integrate to one.
inline Histogram make_histogram(std::span<const double> samples, std::size_t bins, double lo, double hi,
                                bool density = true) {
  if (bins == 0) throw std::invalid_argument("make_histogram: need at least one bin");
  if (!(lo < hi)) throw std::invalid_argument("make_histogram: empty range");
  Histogram h;
  h.edges.resize(bins + 1);
  for (std::size_t k = 0; k <= bins; ++k) h.edges[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(bins);
  h.edges.back() = hi;
  h.counts.assign(bins, 0.0);
  double inside = 0;
  for (double x : samples) {
    if (!(x >= lo && x <= hi)) continue;
    auto k = static_cast<std::size_t>((x - lo) / (hi - lo) * static_cast<double>(bins));
    h.counts[std::min(k, bins - 1)] += 1;
    inside += 1;
  }
  if (density && inside > 0) {
    for (std::size_t k = 0; k < bins; ++k) h.counts[k] /= inside * h.width(k);
    h.normalized = true;
  }
  return h;
}

/// Default histogram: 60 bins spanning the sample range, as densities.
inline Histogram make_histogram(std::span<const double> samples, std::size_t bins = 60) {
  if (samples.empty()) throw std::invalid_argument("make_histogram: empty sample");
  auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
  double lo = *mn;
  double hi = *mx;
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  return make_histogram(samples, bins, lo, hi, true);
}

/// L1 distance between two histograms on identical edges.
inline double histogram_l1(const Histogram& a, const Histogram& b) {
  if (a.edges != b.edges) throw std::invalid_argument("histogram_l1: histograms use different bins");
  double d = 0;
  for (std::size_t k = 0; k < a.bins(); ++k) d += std::abs(a.counts[k] - b.counts[k]) * a.width(k);
  return d;
}

// ---------------------------------------------------------------------------
// Sphere diagnostics

/// Coulomb energy (1/(N-1)) * 1/2 sum_{i != j} 1/|x_i - x_j|, the Lyapunov
/// functional of the noiseless sphere flow. Coincident particles give +inf.
template <class Scalar>
Scalar sphere_energy(const ParticleEnsemble<Scalar>& e) {
  if (e.dim() != 3) throw std::invalid_argument("sphere_energy: ensemble must be 3-dimensional");
  const Index n = e.size();
  if (n < 2) throw std::invalid_argument("sphere_energy: need at least two particles");
  Scalar sum = 0;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      const Scalar d = (e.positions.row(i) - e.positions.row(j)).norm();
      if (d == 0) return std::numeric_limits<Scalar>::infinity();
      sum += 1 / d;
    }
  // 1/2 over ordered pairs equals the sum over unordered pairs.
  return sum / static_cast<Scalar>(n - 1);
}

/// Neighbor count per particle: j is a neighbor of i when |x_i - x_j| is at
/// most 1.5 times the median nearest-neighbor distance.
template <class Scalar>
std::vector<int> neighbor_counts(const ParticleEnsemble<Scalar>& e, Scalar factor = Scalar(1.5)) {
  const Index n = e.size();
  if (n < 2) throw std::invalid_argument("neighbor_counts: need at least two particles");
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> dist(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j) dist(i, j) = dist(j, i) = (e.positions.row(i) - e.positions.row(j)).norm();
  std::vector<Scalar> nearest(static_cast<std::size_t>(n), std::numeric_limits<Scalar>::infinity());
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (j != i) nearest[static_cast<std::size_t>(i)] = std::min(nearest[static_cast<std::size_t>(i)], dist(i, j));
  std::vector<Scalar> sorted = nearest;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t h = sorted.size() / 2;
  const Scalar median = sorted.size() % 2 ? sorted[h] : (sorted[h - 1] + sorted[h]) / 2;
  const Scalar threshold = factor * median;
  std::vector<int> counts(static_cast<std::size_t>(n), 0);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (j != i && dist(i, j) <= threshold) ++counts[static_cast<std::size_t>(i)];
  return counts;
}

// ---------------------------------------------------------------------------
// Clustering diagnostics

/// Adjusted Rand index between two labelings of the same items.
inline double adjusted_rand_index(const Labels& predicted, const Labels& truth) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("adjusted_rand_index: length mismatch");
  const double n = static_cast<double>(truth.size());
  if (truth.size() < 2) return 1.0;
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> rows;
  std::map<int, double> cols;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    table[{predicted[k], truth[k]}] += 1;
    rows[predicted[k]] += 1;
    cols[truth[k]] += 1;
  }
  auto choose2 = [](double v) { return v * (v - 1) / 2; };
  double index = 0;
  for (const auto& [key, v] : table) index += choose2(v);
  double a = 0;
  for (const auto& [key, v] : rows) a += choose2(v);
  double b = 0;
  for (const auto& [key, v] : cols) b += choose2(v);
  const double expected = a * b / choose2(n);
  const double maximum = (a + b) / 2;
  if (maximum == expected) return 1.0;  // both labelings trivial and identical in structure
  return (index - expected) / (maximum - expected);
}

/// Permutation sorting positions ascending (stable): perm[k] is the index
/// of the k-th smallest position.
inline std::vector<Index> reorder_permutation(std::span<const double> positions) {
  std::vector<Index> perm(positions.size());
  std::iota(perm.begin(), perm.end(), Index{0});
  std::stable_sort(perm.begin(), perm.end(), [&](Index a, Index b) {
    return positions[static_cast<std::size_t>(a)] < positions[static_cast<std::size_t>(b)];
  });
  return perm;
}

/// Value-weighted `quantile` of |rank(i) - rank(j)| over off-diagonal
/// entries at least as large as the median off-diagonal magnitude, after
/// reordering rows and columns by `perm`. Smaller means large entries sit
/// closer to the diagonal.
template <class Scalar>
double weighted_bandwidth(const Eigen::SparseMatrix<Scalar, Eigen::RowMajor>& a, std::span<const Index> perm,
                          double quantile = 0.9) {
  using Sparse = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;
  if (static_cast<Index>(perm.size()) != a.rows()) throw std::invalid_argument("weighted_bandwidth: bad permutation");
  std::vector<Index> rank(perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) rank[static_cast<std::size_t>(perm[k])] = static_cast<Index>(k);
  std::vector<double> magnitudes;
  for (Index r = 0; r < a.outerSize(); ++r)
    for (typename Sparse::InnerIterator it(a, r); it; ++it)
      if (it.col() != r && it.value() != Scalar(0)) magnitudes.push_back(std::abs(static_cast<double>(it.value())));
  if (magnitudes.empty()) return 0;
  std::nth_element(magnitudes.begin(), magnitudes.begin() + static_cast<std::ptrdiff_t>(magnitudes.size() / 2),
                   magnitudes.end());
  const double cut = magnitudes[magnitudes.size() / 2];
  std::vector<std::pair<double, double>> spread;  // (distance, weight)
  double total = 0;
  for (Index r = 0; r < a.outerSize(); ++r)
    for (typename Sparse::InnerIterator it(a, r); it; ++it) {
      const double v = std::abs(static_cast<double>(it.value()));
      if (it.col() == r || v < cut) continue;
      const auto d = static_cast<double>(std::abs(rank[static_cast<std::size_t>(r)] - rank[static_cast<std::size_t>(it.col())]));
      spread.emplace_back(d, v);
      total += v;
    }
  std::sort(spread.begin(), spread.end());
  double acc = 0;
  for (const auto& [d, w] : spread) {
    acc += w;
    if (acc >= quantile * total) return d;
  }
  return spread.back().first;
}

// ---------------------------------------------------------------------------
// Records

/// Timestamped named measurements; column order is insertion order.
struct DiagnosticRecord {
  double time = 0;
  std::vector<std::pair<std::string, double>> metrics;

  void set(std::string key, double value) {
    for (auto& [k, v] : metrics)
      if (k == key) {
        v = value;
        return;
      }
    metrics.emplace_back(std::move(key), value);
  }
};

}  // namespace rbm
