#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace rbm {

using Index = Eigen::Index;

/// Largest spatial dimension a particle may live in. Points of this size are
/// stored inline, so per-pair arithmetic never touches the heap.
inline constexpr Index kMaxDim = 3;

/// One particle position, velocity or force.
template <class Scalar>
using PointT = Eigen::Matrix<Scalar, 1, Eigen::Dynamic, Eigen::RowMajor, 1, kMaxDim>;

/// Contiguous (particle, axis) coordinate buffer, one particle per row.
template <class Scalar>
using CoordMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Raised when a stepping driver produces a NaN or infinite coordinate.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(Index particle, long long step)
      : std::runtime_error(describe(particle, step)), particle_(particle), step_(step) {}

  Index particle() const noexcept { return particle_; }
  /// Step index, or -1 when raised below the driver level.
  long long step() const noexcept { return step_; }

 private:
  static std::string describe(Index particle, long long step) {
    std::string msg = "non-finite coordinate for particle " + std::to_string(particle);
    if (step >= 0) msg += " at step " + std::to_string(step);
    return msg;
  }

  Index particle_;
  long long step_;
};

/// Positions (and, for second-order models, velocities) of N particles.
///
/// `previous` holds X_{n-1} for the position-Verlet recursion and is empty
/// until the first Verlet step has been taken.
template <class Scalar>
struct ParticleEnsemble {
  using Matrix = CoordMatrix<Scalar>;

  Matrix positions;
  std::optional<Matrix> velocities;
  std::optional<Matrix> previous;
  Scalar time = 0;

  ParticleEnsemble() = default;
  explicit ParticleEnsemble(Matrix x, Scalar t = 0) : positions(std::move(x)), time(t) {}
  ParticleEnsemble(Matrix x, Matrix v, Scalar t = 0)
      : positions(std::move(x)), velocities(std::move(v)), time(t) {}

  Index size() const noexcept { return positions.rows(); }
  Index dim() const noexcept { return positions.cols(); }
  bool second_order() const noexcept { return velocities.has_value(); }
};

using Ensemble = ParticleEnsemble<double>;

/// Index of the first particle with a non-finite coordinate, or -1.
template <class Scalar>
Index first_non_finite(const CoordMatrix<Scalar>& m) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index k = 0; k < m.cols(); ++k)
      if (!std::isfinite(m(i, k))) return i;
  return -1;
}

template <class Scalar>
void require_finite(const ParticleEnsemble<Scalar>& e) {
  if (Index i = first_non_finite(e.positions); i >= 0) throw NonFiniteError(i, -1);
  if (e.velocities)
    if (Index i = first_non_finite(*e.velocities); i >= 0) throw NonFiniteError(i, -1);
}

/// Checks the shape and finiteness invariants; throws std::invalid_argument.
template <class Scalar>
void validate(const ParticleEnsemble<Scalar>& e) {
  if (e.size() < 1) throw std::invalid_argument("ensemble has no particles");
  if (e.dim() < 1 || e.dim() > kMaxDim)
    throw std::invalid_argument("ensemble dimension must be in [1, 3]");
  if (first_non_finite(e.positions) >= 0)
    throw std::invalid_argument("ensemble positions contain non-finite values");
  if (e.velocities) {
    if (e.velocities->rows() != e.size() || e.velocities->cols() != e.dim())
      throw std::invalid_argument("velocity buffer shape differs from positions");
    if (first_non_finite(*e.velocities) >= 0)
      throw std::invalid_argument("ensemble velocities contain non-finite values");
  }
  if (!(e.time >= 0)) throw std::invalid_argument("ensemble time must be >= 0");
}

/// One-dimensional ensemble from scalar samples.
template <class Scalar>
ParticleEnsemble<Scalar> ensemble_from_samples(std::span<const Scalar> samples) {
  CoordMatrix<Scalar> x(static_cast<Index>(samples.size()), 1);
  for (Index i = 0; i < x.rows(); ++i) x(i, 0) = samples[static_cast<std::size_t>(i)];
  ParticleEnsemble<Scalar> e(std::move(x));
  validate(e);
  return e;
}

}  // namespace rbm
