#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "rbm/batching.hpp"
#include "rbm/ensemble.hpp"
#include "rbm/model.hpp"
#include "rbm/rng.hpp"

namespace rbm {

enum class SchemeKind { rbm1, rbm_r, rbm_r_prime, full };
enum class IntraKind { euler, split_exact, verlet };
enum class BatchSampler { uniform, edges };

/// How one step is taken. `euler` is Euler-Maruyama whenever the model has
/// noise; `split_exact` runs the model's exact pair flow, then the
/// confinement/noise substep.
struct StepScheme {
  SchemeKind kind = SchemeKind::rbm1;
  IntraKind intra = IntraKind::euler;
  Index batch_size = 2;
  bool project_sphere = false;
  BatchSampler sampler = BatchSampler::uniform;
  int threads = 1;
};

/// Throws std::invalid_argument when the scheme cannot drive the model.
template <class Scalar>
void validate_scheme(const StepScheme& s, const InteractionModel<Scalar>& m, Index n) {
  detail::check_batch_size(n, s.batch_size);
  if (s.intra == IntraKind::verlet && !m.second_order)
    throw std::invalid_argument("verlet stepping requires a second-order model");
  if (m.second_order && s.intra != IntraKind::verlet)
    throw std::invalid_argument("second-order models must use verlet stepping");
  if (s.intra == IntraKind::verlet && (s.kind == SchemeKind::rbm_r || s.kind == SchemeKind::rbm_r_prime))
    throw std::invalid_argument("verlet stepping supports the rbm1 and full schemes only");
  if (s.intra == IntraKind::split_exact) {
    if (!m.pair_exact) throw std::invalid_argument("model '" + m.name + "' has no exact pair flow");
    if (s.batch_size != 2) throw std::invalid_argument("split_exact requires batch size 2");
    if (s.kind == SchemeKind::full) throw std::invalid_argument("the full scheme cannot use split_exact");
  }
  if (s.sampler == BatchSampler::edges) {
    if (s.kind != SchemeKind::rbm_r) throw std::invalid_argument("edge sampling is only available for rbm_r");
    if (!m.adjacency || m.adjacency->edges().empty())
      throw std::invalid_argument("edge sampling requires a model with a nonempty adjacency matrix");
    if (s.batch_size != 2) throw std::invalid_argument("edge sampling requires batch size 2");
  }
  if (s.threads < 1) throw std::invalid_argument("thread count must be >= 1");
}

/// n x dim matrix of Brownian increments sqrt(tau) z.
template <class Scalar>
CoordMatrix<Scalar> draw_increments(Index n, Index dim, Scalar tau, RngStream& rng) {
  CoordMatrix<Scalar> inc(n, dim);
  const Scalar scale = std::sqrt(tau);
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < dim; ++k) inc(i, k) = scale * static_cast<Scalar>(rng.normal());
  return inc;
}

namespace detail {

template <class Scalar>
bool wants_projection(const StepScheme& s, const InteractionModel<Scalar>& m) {
  return s.project_sphere || m.constraint == Constraint::unit_sphere;
}

/// Interaction forces on each batch member (row a <-> members[a]), with the
/// batch prefactor 1/(|batch|-1) applied. The fully coupled force is the
/// special case members = 0..N-1, so both paths share one summation order.
template <class Scalar>
CoordMatrix<Scalar> batch_forces(const CoordMatrix<Scalar>& x, std::span<const Index> members,
                                 const InteractionModel<Scalar>& m) {
  using Point = PointT<Scalar>;
  const auto b = static_cast<Index>(members.size());
  CoordMatrix<Scalar> f = CoordMatrix<Scalar>::Zero(b, x.cols());
  if (m.kernel1d && m.antisymmetric && x.cols() == 1 && !m.pair_weight) {
    Scalar* out = f.data();
    for (Index a = 0; a < b; ++a) {
      const Scalar xi = x(members[static_cast<std::size_t>(a)], 0);
      Scalar acc = 0;
      for (Index c = a + 1; c < b; ++c) {
        const Scalar k = m.kernel1d(xi - x(members[static_cast<std::size_t>(c)], 0));
        acc += k;
        out[c] -= k;
      }
      out[a] += acc;
    }
    f /= static_cast<Scalar>(b - 1);
    return f;
  }
  for (Index a = 0; a < b; ++a) {
    const Index i = members[static_cast<std::size_t>(a)];
    const Point xi = x.row(i);
    for (Index c = a + 1; c < b; ++c) {
      const Index j = members[static_cast<std::size_t>(c)];
      const Point xj = x.row(j);
      const Point fij = m.force(i, j, xi, xj);
      f.row(a) += fij;
      if (m.antisymmetric)
        f.row(c) -= fij;
      else
        f.row(c) += m.force(j, i, xj, xi);
    }
  }
  f /= static_cast<Scalar>(b - 1);
  return f;
}

template <class Scalar>
PointT<Scalar> noise_term(const InteractionModel<Scalar>& m, const PointT<Scalar>& x, const PointT<Scalar>& db) {
  if (m.noise.kind == NoiseKind::multiplicative) return m.noise.sigma * x.cwiseProduct(db);
  return m.noise.sigma * db;
}

template <class Scalar>
void project_rows(CoordMatrix<Scalar>& x, std::span<const Index> members) {
  for (Index i : members) {
    const Scalar r = x.row(i).norm();
    if (!(r > 0)) throw std::domain_error("cannot project a zero-norm position onto the sphere");
    x.row(i) /= r;
  }
}

/// `noise(a)` returns the Brownian increment for members[a], or is empty.
template <class Scalar>
using NoiseFn = std::function<PointT<Scalar>(Index)>;

/// Forward Euler / Euler-Maruyama for one batch, in place.
template <class Scalar>
void evolve_euler(CoordMatrix<Scalar>& x, std::span<const Index> members, const InteractionModel<Scalar>& m,
                  Scalar tau, const NoiseFn<Scalar>& noise, bool project) {
  using Point = PointT<Scalar>;
  const CoordMatrix<Scalar> f = batch_forces(x, members, m);
  const bool noisy = m.noise.active() && noise;
  for (Index a = 0; a < static_cast<Index>(members.size()); ++a) {
    const Index i = members[static_cast<std::size_t>(a)];
    const Point xi = x.row(i);
    Point next = xi + tau * (m.external(xi) + f.row(a));
    if (noisy) next += noise_term(m, xi, noise(a));
    x.row(i) = next;
  }
  if (project) project_rows(x, members);
}

/// Exact pair flow, then confinement + noise. Batches of size b > 2 (an odd
/// population's final batch) run every pair flow in turn for tau/(b-1).
template <class Scalar>
void evolve_split(CoordMatrix<Scalar>& x, std::span<const Index> members, const InteractionModel<Scalar>& m,
                  Scalar tau, const NoiseFn<Scalar>& noise, bool project) {
  using Point = PointT<Scalar>;
  const auto b = members.size();
  const Scalar pair_tau = tau / static_cast<Scalar>(b - 1);
  for (std::size_t a = 0; a < b; ++a)
    for (std::size_t c = a + 1; c < b; ++c) {
      const Index i = members[a];
      const Index j = members[c];
      Point xi = x.row(i);
      Point xj = x.row(j);
      m.pair_exact(i, j, xi, xj, pair_tau);
      x.row(i) = xi;
      x.row(j) = xj;
      if (project) {
        x.row(i).normalize();
        x.row(j).normalize();
      }
    }

  const bool noisy = m.noise.active() && noise;
  if (!m.confine && !noisy) return;
  for (std::size_t a = 0; a < b; ++a) {
    const Index i = members[a];
    const Point xi = x.row(i);
    Point next = xi;
    if (m.confine) next += tau * m.confine(xi);
    if (noisy) {
      const Point db = noise(static_cast<Index>(a));
      if (m.noise.kind == NoiseKind::multiplicative) {
        // Exact geometric Brownian substep: mean-preserving, keeps signs.
        const Scalar s = m.noise.sigma;
        next = next.array() * (-s * s / 2 * tau + s * db.array()).exp();
      } else {
        next += m.noise.sigma * db;
      }
    }
    x.row(i) = next;
  }
  if (project) project_rows(x, members);
}

template <class Scalar>
void evolve_batch(CoordMatrix<Scalar>& x, std::span<const Index> members, const InteractionModel<Scalar>& m,
                  const StepScheme& s, Scalar tau, const NoiseFn<Scalar>& noise) {
  const bool project = wants_projection(s, m);
  if (s.intra == IntraKind::split_exact)
    evolve_split(x, members, m, tau, noise, project);
  else
    evolve_euler(x, members, m, tau, noise, project);
}

template <class Scalar>
NoiseFn<Scalar> global_noise(const InteractionModel<Scalar>& m, const CoordMatrix<Scalar>* inc,
                             std::span<const Index> members) {
  if (!m.noise.active() || inc == nullptr || inc->rows() == 0) return {};
  return [inc, members](Index a) -> PointT<Scalar> {
    return inc->row(members[static_cast<std::size_t>(a)]);
  };
}

template <class Scalar>
void check_increments(const ParticleEnsemble<Scalar>& e, const CoordMatrix<Scalar>& inc) {
  if (inc.rows() != 0 && (inc.rows() != e.size() || inc.cols() != e.dim()))
    throw std::invalid_argument("noise increment matrix does not match the ensemble shape");
}

template <class Scalar>
void check_model_dim(const ParticleEnsemble<Scalar>& e, const InteractionModel<Scalar>& m) {
  if (e.dim() != m.dim) throw std::invalid_argument("ensemble dimension differs from model dimension");
}

}  // namespace detail

enum class ForceMode { batch, full };

/// One position-Verlet step, X_{n+1} = 2 X_n - X_{n-1} + F_n tau^2, started
/// with X_1 = X_0 + V_0 tau + F_0 tau^2 / 2. F_n is either the fully coupled
/// force or the RBM-1 batch force from a fresh division. Velocities are
/// reported as (X_{n+1} - X_n)/tau + F_n tau/2.
template <class Scalar>
ParticleEnsemble<Scalar> verlet_step(ParticleEnsemble<Scalar> e, const InteractionModel<Scalar>& m, Scalar tau,
                                     ForceMode mode, Index p, RngStream& rng) {
  detail::check_model_dim(e, m);
  if (!e.velocities) throw std::invalid_argument("verlet_step requires initialized velocities");
  const Index n = e.size();
  CoordMatrix<Scalar> force(n, e.dim());
  if (mode == ForceMode::full) {
    std::vector<Index> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), Index{0});
    force = detail::batch_forces(e.positions, std::span<const Index>(all), m);
  } else {
    const BatchSchedule schedule = random_division(n, p, rng);
    for (std::size_t k = 0; k < schedule.count(); ++k) {
      const auto members = schedule.batch(k);
      const CoordMatrix<Scalar> f = detail::batch_forces(e.positions, members, m);
      for (std::size_t a = 0; a < members.size(); ++a) force.row(members[a]) = f.row(static_cast<Index>(a));
    }
  }
  if (m.confine)
    for (Index i = 0; i < n; ++i) force.row(i) += m.confine(PointT<Scalar>(e.positions.row(i)));

  CoordMatrix<Scalar> next;
  if (e.previous)
    next = 2 * e.positions - *e.previous + (tau * tau) * force;
  else
    next = e.positions + tau * *e.velocities + (tau * tau / 2) * force;
  *e.velocities = (next - e.positions) / tau + (tau / 2) * force;
  e.previous = std::move(e.positions);
  e.positions = std::move(next);
  e.time += tau;
  require_finite(e);
  return e;
}

/// One RBM-1 step: fresh random division, each batch evolved for tau.
/// `increments` (n x dim Brownian increments, or empty) are indexed by
/// particle, so a p = N run reproduces full coupling under shared noise.
template <class Scalar>
ParticleEnsemble<Scalar> rbm1_step(ParticleEnsemble<Scalar> e, const InteractionModel<Scalar>& m,
                                   const StepScheme& s, Scalar tau, RngStream& rng,
                                   const CoordMatrix<Scalar>& increments) {
  detail::check_model_dim(e, m);
  if (s.intra == IntraKind::verlet) return verlet_step(std::move(e), m, tau, ForceMode::batch, s.batch_size, rng);
  detail::check_increments(e, increments);
  const BatchSchedule schedule = random_division(e.size(), s.batch_size, rng);

  auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const auto members = schedule.batch(k);
      detail::evolve_batch(e.positions, members, m, s, tau, detail::global_noise(m, &increments, members));
    }
  };
  const std::size_t batches = schedule.count();
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(s.threads), batches);
  if (workers <= 1) {
    run_range(0, batches);
  } else {
    // Batches touch disjoint particles and consume no randomness here, so
    // the result does not depend on the thread count.
    std::vector<std::jthread> pool;
    const std::size_t chunk = (batches + workers - 1) / workers;
    for (std::size_t w = 1; w < workers; ++w)
      pool.emplace_back(run_range, std::min(batches, w * chunk), std::min(batches, (w + 1) * chunk));
    run_range(0, std::min(batches, chunk));
  }
  e.time += tau;
  require_finite(e);
  return e;
}

template <class Scalar>
ParticleEnsemble<Scalar> rbm1_step(ParticleEnsemble<Scalar> e, const InteractionModel<Scalar>& m,
                                   const StepScheme& s, Scalar tau, RngStream& rng) {
  if (s.intra == IntraKind::verlet || !m.noise.active()) return rbm1_step(std::move(e), m, s, tau, rng, {});
  // Division is drawn before the noise so both come from one stream.
  RngStream noise_rng = rng.split(0);
  const CoordMatrix<Scalar> inc = draw_increments(e.size(), e.dim(), tau, noise_rng);
  return rbm1_step(std::move(e), m, s, tau, rng, inc);
}

/// Fully coupled forward Euler / Euler-Maruyama step, prefactor 1/(N-1).
template <class Scalar>
ParticleEnsemble<Scalar> full_step(ParticleEnsemble<Scalar> e, const InteractionModel<Scalar>& m,
                                   const StepScheme& s, Scalar tau, RngStream& rng,
                                   const CoordMatrix<Scalar>& increments) {
  detail::check_model_dim(e, m);
  if (s.intra == IntraKind::verlet) return verlet_step(std::move(e), m, tau, ForceMode::full, s.batch_size, rng);
  if (s.intra != IntraKind::euler) throw std::invalid_argument("full_step requires euler stepping");
  if (e.size() < 2) throw std::invalid_argument("full_step requires at least two particles");
  detail::check_increments(e, increments);
  std::vector<Index> all(static_cast<std::size_t>(e.size()));
  std::iota(all.begin(), all.end(), Index{0});
  const std::span<const Index> members(all);
  detail::evolve_euler(e.positions, members, m, tau, detail::global_noise(m, &increments, members),
                       detail::wants_projection(s, m));
  e.time += tau;
  require_finite(e);
  return e;
}

template <class Scalar>
ParticleEnsemble<Scalar> full_step(ParticleEnsemble<Scalar> e, const InteractionModel<Scalar>& m,
                                   const StepScheme& s, Scalar tau, RngStream& rng) {
  if (s.intra == IntraKind::verlet || !m.noise.active()) return full_step(std::move(e), m, s, tau, rng, {});
  RngStream noise_rng = rng.split(0);
  const CoordMatrix<Scalar> inc = draw_increments(e.size(), e.dim(), tau, noise_rng);
  return full_step(std::move(e), m, s, tau, rng, inc);
}

namespace detail {

template <class Scalar>
std::vector<Index> pick_batch(const InteractionModel<Scalar>& m, const StepScheme& s, Index n, RngStream& rng) {
  std::vector<Index> members;
  if (s.sampler == BatchSampler::edges) {
    const auto& edges = m.adjacency->edges();
    const auto& [i, j] = edges[static_cast<std::size_t>(rng.below(edges.size()))];
    members = {i, j};
  } else {
    members.reserve(static_cast<std::size_t>(s.batch_size));
    random_subset(n, s.batch_size, rng, members);
  }
  return members;
}

template <class Scalar>
NoiseFn<Scalar> local_noise(const InteractionModel<Scalar>& m, Index count, Index dim, Scalar tau,
                            RngStream& rng, CoordMatrix<Scalar>& storage) {
  if (!m.noise.active()) return {};
  storage = draw_increments(count, dim, tau, rng);
  return [&storage](Index a) -> PointT<Scalar> { return storage.row(a); };
}

}  // namespace detail

/// One RBM-r iteration: a single random batch evolved for pseudo-time tau,
/// everyone else untouched. ceil(N/p) iterations count as physical time tau,
/// so `time` advances by tau / ceil(N/p).
template <class Scalar>
ParticleEnsemble<Scalar> rbm_r_step(ParticleEnsemble<Scalar> e, const InteractionModel<Scalar>& m,
                                    const StepScheme& s, Scalar tau, RngStream& rng) {
  detail::check_model_dim(e, m);
  const std::vector<Index> members = detail::pick_batch(m, s, e.size(), rng);
  CoordMatrix<Scalar> storage;
  const auto noise = detail::local_noise(m, static_cast<Index>(members.size()), e.dim(), tau, rng, storage);
  detail::evolve_batch(e.positions, std::span<const Index>(members), m, s, tau, noise);
  e.time += tau / static_cast<Scalar>(sweep_batch_count(e.size(), s.batch_size));
  for (Index i : members)
    for (Index k = 0; k < e.dim(); ++k)
      if (!std::isfinite(e.positions(i, k))) throw NonFiniteError(i, -1);
  return e;
}

/// One RBM-r' sweep: ceil(N/p) with-replacement batches, each evolved for
/// tau from the pre-sweep state. A particle in several batches keeps the
/// result of the last one.
template <class Scalar>
ParticleEnsemble<Scalar> rbm_r_prime_sweep(ParticleEnsemble<Scalar> e, const InteractionModel<Scalar>& m,
                                           const StepScheme& s, Scalar tau, RngStream& rng) {
  detail::check_model_dim(e, m);
  const BatchSchedule schedule = random_batches_with_replacement(e.size(), s.batch_size, rng);
  CoordMatrix<Scalar> work = e.positions;  // equals the pre-sweep state between batches
  CoordMatrix<Scalar> storage;
  for (std::size_t k = 0; k < schedule.count(); ++k) {
    const auto members = schedule.batch(k);
    CoordMatrix<Scalar> saved(static_cast<Index>(members.size()), e.dim());
    for (std::size_t a = 0; a < members.size(); ++a) saved.row(static_cast<Index>(a)) = work.row(members[a]);
    const auto noise = detail::local_noise(m, static_cast<Index>(members.size()), e.dim(), tau, rng, storage);
    detail::evolve_batch(work, members, m, s, tau, noise);
    for (std::size_t a = 0; a < members.size(); ++a) {
      e.positions.row(members[a]) = work.row(members[a]);
      work.row(members[a]) = saved.row(static_cast<Index>(a));
    }
  }
  e.time += tau;
  require_finite(e);
  return e;
}

/// Normalizes every position onto the unit sphere.
template <class Scalar>
ParticleEnsemble<Scalar> sphere_project(ParticleEnsemble<Scalar> e) {
  std::vector<Index> all(static_cast<std::size_t>(e.size()));
  std::iota(all.begin(), all.end(), Index{0});
  detail::project_rows(e.positions, std::span<const Index>(all));
  return e;
}

/// Exact geometric Brownian substep Y <- Y exp(-D tau + sqrt(2 D tau) z).
template <class Scalar>
ParticleEnsemble<Scalar> wealth_noise_step(ParticleEnsemble<Scalar> e, Scalar diffusion, Scalar tau, RngStream& rng) {
  if (!(diffusion >= 0)) throw std::invalid_argument("diffusion coefficient must be >= 0");
  if ((e.positions.array() <= 0).any()) throw std::domain_error("wealth must be strictly positive");
  const Scalar s = std::sqrt(2 * diffusion * tau);
  for (Index i = 0; i < e.size(); ++i)
    for (Index k = 0; k < e.dim(); ++k)
      e.positions(i, k) *= std::exp(-diffusion * tau + s * static_cast<Scalar>(rng.normal()));
  return e;
}

}  // namespace rbm
