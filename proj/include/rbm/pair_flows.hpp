#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include <Eigen/Core>

namespace rbm {

/// Separations below this are treated as coincident by the singular flows
/// and replaced by this value along a fixed direction.
inline constexpr double kCoincidenceFloor = 1e-14;

/// Exact two-body flow of dx_i = dt/(x_i - x_j), dx_j = dt/(x_j - x_i).
///
/// The midpoint is conserved and the separation d obeys (d^2)' = 4, so
/// d(tau) = sgn(d0) sqrt(d0^2 + 4 tau). Ordering never flips.
template <class Scalar>
std::pair<Scalar, Scalar> pair_exact_dyson(Scalar xi, Scalar xj, Scalar tau) {
  const Scalar mid = (xi + xj) / 2;
  Scalar d0 = xi - xj;
  if (std::abs(d0) < Scalar(kCoincidenceFloor))
    d0 = d0 < 0 ? -Scalar(kCoincidenceFloor) : Scalar(kCoincidenceFloor);
  const Scalar half = std::copysign(std::sqrt(d0 * d0 + 4 * tau), d0) / 2;
  return {mid + half, mid - half};
}

/// Exact two-body flow of dx_i = (x_i - x_j)/|x_i - x_j|^3 dt (and the
/// opposite force on j) in any dimension. Direction and midpoint are
/// conserved; |d|^3 grows by 6 tau.
template <class DerivedA, class DerivedB>
auto pair_exact_coulomb(const Eigen::MatrixBase<DerivedA>& xi, const Eigen::MatrixBase<DerivedB>& xj,
                        typename DerivedA::Scalar tau) {
  using Scalar = typename DerivedA::Scalar;
  using Point = typename DerivedA::PlainObject;
  const Point mid = (xi + xj) / 2;
  Point d = xi - xj;
  Scalar r0 = d.norm();
  if (r0 == Scalar(0)) {
    d.setZero();
    d(0) = Scalar(kCoincidenceFloor);
    r0 = Scalar(kCoincidenceFloor);
  } else if (r0 < Scalar(kCoincidenceFloor)) {
    d *= Scalar(kCoincidenceFloor) / r0;
    r0 = Scalar(kCoincidenceFloor);
  }
  const Scalar r1 = std::cbrt(r0 * r0 * r0 + 6 * tau);
  const Point half = d * (r1 / (2 * r0));
  return std::pair<Point, Point>{mid + half, mid - half};
}

template <class Scalar>
std::pair<Eigen::Matrix<Scalar, 1, 3>, Eigen::Matrix<Scalar, 1, 3>> pair_exact_coulomb3d(
    const Eigen::Matrix<Scalar, 1, 3>& xi, const Eigen::Matrix<Scalar, 1, 3>& xj, Scalar tau) {
  return pair_exact_coulomb(xi, xj, tau);
}

/// Exact flow of the linear pair ODE dx_i = rate (x_j - x_i) dt (and
/// symmetrically for j): midpoint conserved, difference scaled by
/// exp(-2 rate tau). Negative rates repel.
template <class DerivedA, class DerivedB>
auto pair_exact_linear(const Eigen::MatrixBase<DerivedA>& xi, const Eigen::MatrixBase<DerivedB>& xj,
                       typename DerivedA::Scalar rate, typename DerivedA::Scalar tau) {
  using Point = typename DerivedA::PlainObject;
  const Point sum = xi + xj;
  const Point diff = (xi - xj) * std::exp(-2 * rate * tau);
  return std::pair<Point, Point>{(sum + diff) / 2, (sum - diff) / 2};
}

}  // namespace rbm
