#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "rbm/adjacency.hpp"
#include "rbm/model.hpp"
#include "rbm/pair_flows.hpp"
#include "rbm/rng.hpp"

namespace rbm {

namespace detail {

template <class Scalar>
typename InteractionModel<Scalar>::PairFlow linear_pair_flow(std::function<Scalar(Index, Index, Scalar)> rate) {
  return [rate = std::move(rate)](Index i, Index j, PointT<Scalar>& xi, PointT<Scalar>& xj, Scalar tau) {
    const Scalar k = rate(i, j, (xi - xj).norm());
    if (k == Scalar(0)) return;
    auto [yi, yj] = pair_exact_linear(xi, xj, k, tau);
    xi = yi;
    xj = yj;
  };
}

inline void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace detail

/// dX^i = -beta X^i + 1/(N-1) sum_j K(X^i - X^j), K(z) = z / (1 + z^2).
/// An optional additive noise sigma is accepted for coupling experiments.
template <class Scalar = double>
InteractionModel<Scalar> model_test1d(Scalar beta, Scalar sigma = 0) {
  detail::require(beta >= 0, "test1d: beta must be >= 0");
  detail::require(sigma >= 0, "test1d: sigma must be >= 0");
  using Point = PointT<Scalar>;
  InteractionModel<Scalar> m;
  m.name = "test1d";
  m.dim = 1;
  m.confine = [beta](const Point& x) -> Point { return -beta * x; };
  m.kernel = [](const Point& z) -> Point { return z.array() / (1 + z.array().square()); };
  m.kernel1d = [](Scalar z) { return z / (1 + z * z); };
  if (sigma > 0) m.noise = {NoiseKind::additive, sigma, std::nullopt};
  return m;
}

/// Second-order version: X' = V, V' = 1/(N-1) sum_j K(X^i - X^j), same K.
template <class Scalar = double>
InteractionModel<Scalar> model_hamiltonian1d() {
  InteractionModel<Scalar> m = model_test1d<Scalar>(0);
  m.name = "hamiltonian1d";
  m.confine = nullptr;
  m.second_order = true;
  return m;
}

/// Dyson Brownian motion with prefactor 1/(N-1) and noise 1/sqrt(N).
/// The kernel 1/z is singular; split_exact stepping uses the exact pair flow.
template <class Scalar = double>
InteractionModel<Scalar> model_dyson(Scalar beta, Index n) {
  detail::require(beta >= 0, "dyson: beta must be >= 0");
  detail::require(n >= 2, "dyson: n must be >= 2");
  using Point = PointT<Scalar>;
  InteractionModel<Scalar> m;
  m.name = "dyson";
  m.dim = 1;
  m.confine = [beta](const Point& x) -> Point { return -beta * x; };
  m.kernel = [](const Point& z) -> Point { return z.array().inverse(); };
  m.noise = {NoiseKind::additive, 1 / std::sqrt(static_cast<Scalar>(n)), std::nullopt};
  m.pair_exact = [](Index, Index, Point& xi, Point& xj, Scalar tau) {
    auto [a, b] = pair_exact_dyson(xi(0), xj(0), tau);
    xi(0) = a;
    xj(0) = b;
  };
  return m;
}

/// Coulomb repulsion on the unit sphere, no noise.
template <class Scalar = double>
InteractionModel<Scalar> model_thomson() {
  using Point = PointT<Scalar>;
  InteractionModel<Scalar> m;
  m.name = "thomson";
  m.dim = 3;
  m.kernel = [](const Point& z) -> Point {
    const Scalar r = z.norm();
    return z / (r * r * r);
  };
  m.pair_exact = [](Index, Index, Point& xi, Point& xj, Scalar tau) {
    auto [a, b] = pair_exact_coulomb(xi, xj, tau);
    xi = a;
    xj = b;
  };
  m.constraint = Constraint::unit_sphere;
  return m;
}

/// Homogeneous trading model with phi(y) = y^2/2:
/// dY^i = -kappa (Y^i - Y^j) dt + sqrt(2 D) Y^i dB^i.
template <class Scalar = double>
InteractionModel<Scalar> model_wealth(Scalar kappa, Scalar diffusion) {
  detail::require(kappa > 0, "wealth: kappa must be > 0");
  detail::require(diffusion > 0, "wealth: D must be > 0");
  using Point = PointT<Scalar>;
  InteractionModel<Scalar> m;
  m.name = "wealth";
  m.dim = 1;
  m.kernel = [kappa](const Point& z) -> Point { return -kappa * z; };
  m.noise = {NoiseKind::multiplicative, std::sqrt(2 * diffusion), std::nullopt};
  m.pair_exact = detail::linear_pair_flow<Scalar>([kappa](Index, Index, Scalar) { return kappa; });
  return m;
}

/// Bounded-confidence opinion dynamics with influence phi = 1_{[0,1]}:
/// dX^i = alpha phi(|X^j - X^i|) (X^j - X^i) dt + eps_N dB^i,
/// eps_N = N^{-gamma} when an exponent is given, else 0. The influence is
/// evaluated once at the start of each pair update.
template <class Scalar = double>
InteractionModel<Scalar> model_opinion(Scalar alpha, Index n, std::optional<Scalar> epsilon_exponent = std::nullopt) {
  detail::require(alpha > 0, "opinion: alpha must be > 0");
  detail::require(n >= 2, "opinion: n must be >= 2");
  using Point = PointT<Scalar>;
  InteractionModel<Scalar> m;
  m.name = "opinion";
  m.dim = 1;
  m.kernel = [alpha](const Point& z) -> Point { return z.norm() <= 1 ? Point(-alpha * z) : Point(Point::Zero(z.size())); };
  m.pair_exact = detail::linear_pair_flow<Scalar>(
      [alpha](Index, Index, Scalar r) { return r <= 1 ? alpha : Scalar(0); });
  if (epsilon_exponent) {
    detail::require(*epsilon_exponent > 0, "opinion: epsilon exponent must be > 0");
    m.noise = {NoiseKind::additive_scaled, std::pow(static_cast<Scalar>(n), -*epsilon_exponent), epsilon_exponent};
  }
  return m;
}

/// Graph clustering dynamics dX^i = alpha (a_ij - beta) (X^j - X^i) dt.
template <class Scalar = double>
InteractionModel<Scalar> model_cluster(std::shared_ptr<const AdjacencyMatrix<Scalar>> adjacency, Scalar alpha,
                                       Scalar beta) {
  detail::require(adjacency != nullptr && adjacency->size() >= 2, "cluster: adjacency needs >= 2 nodes");
  detail::require(alpha > 0, "cluster: alpha must be > 0");
  detail::require(beta > 0 && beta < adjacency->max_weight(),
                          "cluster: beta must lie strictly between 0 and the largest weight");
  using Point = PointT<Scalar>;
  InteractionModel<Scalar> m;
  m.name = "cluster";
  m.dim = 1;
  m.kernel = [alpha](const Point& z) -> Point { return -alpha * z; };
  const AdjacencyMatrix<Scalar>* a = adjacency.get();
  m.pair_weight = [a, beta](Index i, Index j) { return (*a)(i, j) - beta; };
  m.antisymmetric = adjacency->symmetric();
  m.pair_exact = detail::linear_pair_flow<Scalar>(
      [a, alpha, beta](Index i, Index j, Scalar) { return alpha * ((*a)(i, j) - beta); });
  m.adjacency = std::move(adjacency);
  return m;
}

/// Metropolis-Hastings independence sampler with a uniform proposal on
/// [lo, hi]: proposals are never outside the support, so neither are the
/// samples. Burn-in and thinning are fixed per call.
template <class Pdf>
std::vector<double> sample_density_mh(Pdf&& pdf, double lo, double hi, std::size_t count, RngStream& rng,
                                      std::size_t burn_in = 10000, std::size_t thinning = 10) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
    throw std::invalid_argument("sample_density_mh: support must be a bounded interval");
  if (thinning == 0) throw std::invalid_argument("sample_density_mh: thinning must be >= 1");
  // Start from the best point of a coarse grid.
  double x = lo;
  double px = 0;
  constexpr int kGrid = 1024;
  for (int g = 0; g < kGrid; ++g) {
    const double c = lo + (hi - lo) * (g + 0.5) / kGrid;
    const double pc = pdf(c);
    if (pc > px) {
      x = c;
      px = pc;
    }
  }
  if (!(px > 0)) throw std::invalid_argument("sample_density_mh: pdf vanishes on the support");

  auto advance = [&] {
    const double y = rng.uniform(lo, hi);
    const double py = pdf(y);
    if (py >= px || rng.uniform() * px < py) {
      x = y;
      px = py;
    }
  };
  for (std::size_t k = 0; k < burn_in; ++k) advance();
  std::vector<double> out;
  out.reserve(count);
  while (out.size() < count) {
    for (std::size_t k = 0; k < thinning; ++k) advance();
    out.push_back(x);
  }
  return out;
}

/// Semicircle density of radius 2, sqrt(4 - x^2) / (2 pi).
inline double semicircle_radius2_pdf(double x) {
  const double s = 4 - x * x;
  return s > 0 ? std::sqrt(s) / (2 * std::numbers::pi) : 0.0;
}

/// Stochastic block model: symmetric 0/1 adjacency, independent entries
/// above the diagonal with probability p_in inside a block and q_out across.
template <class Scalar = double>
std::pair<AdjacencyMatrix<Scalar>, Labels> sbm_generate(const std::vector<Index>& sizes, double p_in, double q_out,
                                                        RngStream& rng) {
  if (sizes.empty()) throw std::invalid_argument("sbm_generate: no blocks");
  if (!(0 <= q_out && q_out < p_in && p_in <= 1))
    throw std::invalid_argument("sbm_generate: need 0 <= q_out < p_in <= 1");
  Labels labels;
  for (std::size_t b = 0; b < sizes.size(); ++b) {
    if (sizes[b] < 1) throw std::invalid_argument("sbm_generate: block sizes must be positive");
    labels.insert(labels.end(), static_cast<std::size_t>(sizes[b]), static_cast<int>(b));
  }
  const auto n = static_cast<Index>(labels.size());
  std::vector<Eigen::Triplet<Scalar>> entries;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      const double prob = labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)] ? p_in : q_out;
      if (rng.uniform() < prob) {
        entries.emplace_back(i, j, Scalar(1));
        entries.emplace_back(j, i, Scalar(1));
      }
    }
  typename AdjacencyMatrix<Scalar>::Sparse a(n, n);
  a.setFromTriplets(entries.begin(), entries.end());
  return {AdjacencyMatrix<Scalar>(std::move(a)), std::move(labels)};
}

/// Cluster labels from terminal 1-D positions: sort, then cut wherever the
/// adjacent gap exceeds `factor` times the median adjacent gap. Labels
/// increase with position.
inline Labels labels_from_positions(std::span<const double> positions, double factor = 5.0) {
  const std::size_t n = positions.size();
  Labels labels(n, 0);
  if (n < 2) return labels;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return positions[a] < positions[b]; });
  std::vector<double> gaps(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) gaps[k] = positions[order[k + 1]] - positions[order[k]];
  std::vector<double> sorted = gaps;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
  const double median = sorted[sorted.size() / 2];
  int label = 0;
  labels[order[0]] = 0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (gaps[k] > factor * median) ++label;
    labels[order[k + 1]] = label;
  }
  return labels;
}

}  // namespace rbm
