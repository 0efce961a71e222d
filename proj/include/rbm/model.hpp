#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "rbm/adjacency.hpp"
#include "rbm/ensemble.hpp"

namespace rbm {

enum class NoiseKind { none, additive, multiplicative, additive_scaled };

/// Diffusion term of the particle SDE.
///
/// additive:        dX = ... + sigma dB
/// additive_scaled: same, with sigma = N^{-scale_exponent}
/// multiplicative:  dY = ... + sigma Y dB, sigma = sqrt(2 D) (wealth model)
template <class Scalar>
struct NoiseSpec {
  NoiseKind kind = NoiseKind::none;
  Scalar sigma = 0;
  std::optional<Scalar> scale_exponent;

  bool active() const noexcept { return kind != NoiseKind::none && sigma != 0; }
};

enum class Constraint { none, unit_sphere };

/// Everything a stepping driver needs to know about one particle system:
///
///   dX^i = b(X^i) dt + (1/(N-1)) sum_{j != i} w_ij K(X^i - X^j) dt + noise
///
/// `confine` is b = -grad V (empty means zero), `kernel` is K evaluated on the
/// displacement x_i - x_j, and `pair_weight` is an optional per-pair factor
/// w_ij (clustering uses a_ij - beta). `pair_exact`, when present, advances a
/// two-particle batch exactly over a duration tau.
template <class Scalar>
struct InteractionModel {
  using Point = PointT<Scalar>;
  using PointFn = std::function<Point(const Point&)>;
  using WeightFn = std::function<Scalar(Index, Index)>;
  using PairFlow = std::function<void(Index i, Index j, Point& xi, Point& xj, Scalar tau)>;

  std::string name;
  Index dim = 1;
  PointFn confine;
  PointFn kernel;
  /// Same kernel as a plain scalar function for d = 1. When set, unweighted
  /// force sums call it directly instead of going through `kernel`.
  Scalar (*kernel1d)(Scalar) = nullptr;
  WeightFn pair_weight;
  /// w_ij K(x_i - x_j) = -w_ji K(x_j - x_i); lets force sums visit each pair once.
  bool antisymmetric = true;
  NoiseSpec<Scalar> noise;
  PairFlow pair_exact;
  Constraint constraint = Constraint::none;
  bool second_order = false;
  /// Present for the clustering model; enables edge-restricted batch sampling.
  std::shared_ptr<const AdjacencyMatrix<Scalar>> adjacency;

  Point force(Index i, Index j, const Point& xi, const Point& xj) const {
    Point f = kernel(xi - xj);
    if (pair_weight) f *= pair_weight(i, j);
    return f;
  }

  Point external(const Point& x) const {
    if (confine) return confine(x);
    return Point::Zero(x.size());
  }
};

using Model = InteractionModel<double>;

}  // namespace rbm
