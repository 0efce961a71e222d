#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

#include <Eigen/Core>

namespace oracle {

using State = Eigen::VectorXd;
using Rhs = std::function<State(const State&)>;

inline State rk4(const Rhs& f, const State& y, double h) {
  const State k1 = f(y);
  const State k2 = f(y + h / 2 * k1);
  const State k3 = f(y + h / 2 * k2);
  const State k4 = f(y + h * k3);
  return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
}

/// Integrates y' = f(y) over [0, t] with step-doubling RK4. The local
/// error estimate of each accepted step is below `tol` (absolute, max norm).
inline State integrate(const Rhs& f, State y, double t, double tol = 1e-13) {
  if (t == 0) return y;
  double done = 0;
  double h = t / 64;
  int guard = 0;
  while (done < t) {
    if (++guard > 10'000'000) throw std::runtime_error("oracle::integrate: too many steps");
    h = std::min(h, t - done);
    const State full = rk4(f, y, h);
    const State half = rk4(f, rk4(f, y, h / 2), h / 2);
    const double err = (full - half).cwiseAbs().maxCoeff() / 15;
    if (err <= tol || h < 1e-14 * t) {
      y = half + (half - full) / 15;  // Richardson extrapolation
      done += h;
      if (err < tol / 64) h *= 2;
    } else {
      h /= 2;
    }
  }
  return y;
}

/// Two-body right-hand sides with state (x_i, x_j) stacked; d components each.
inline Rhs dyson_pair() {
  return [](const State& y) {
    State r(2);
    r(0) = 1 / (y(0) - y(1));
    r(1) = -r(0);
    return r;
  };
}

inline Rhs coulomb_pair(int dim) {
  return [dim](const State& y) {
    const State d = y.head(dim) - y.tail(dim);
    const double n = d.norm();
    State r(2 * dim);
    r.head(dim) = d / (n * n * n);
    r.tail(dim) = -r.head(dim);
    return r;
  };
}

inline Rhs linear_pair(int dim, double rate) {
  return [dim, rate](const State& y) {
    const State d = y.tail(dim) - y.head(dim);
    State r(2 * dim);
    r.head(dim) = rate * d;
    r.tail(dim) = -rate * d;
    return r;
  };
}

}  // namespace oracle
