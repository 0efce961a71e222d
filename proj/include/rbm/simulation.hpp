#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>

#include "rbm/integrators.hpp"

namespace rbm {

/// Per-particle Brownian increments on a fine grid of width `fine_tau`,
/// summed in groups of `ratio` for a coarse step of width ratio * fine_tau.
/// Fine step f always comes from the same stream, so runs at different
/// step sizes that share a seed are driven by the same Brownian paths.
template <class Scalar>
class BrownianIncrements {
 public:
  BrownianIncrements(std::uint64_t seed, Index n, Index dim, Scalar fine_tau, Index ratio)
      : root_(derive_stream(seed, streams::kNoise)), n_(n), dim_(dim), fine_tau_(fine_tau), ratio_(ratio) {
    if (!(fine_tau > 0)) throw std::invalid_argument("fine noise step must be > 0");
    if (ratio < 1) throw std::invalid_argument("noise refinement ratio must be >= 1");
  }

  Index ratio() const noexcept { return ratio_; }

  /// Increment over coarse step m, i.e. fine steps m*ratio .. m*ratio+ratio-1.
  CoordMatrix<Scalar> step(Index m) const {
    CoordMatrix<Scalar> sum = CoordMatrix<Scalar>::Zero(n_, dim_);
    for (Index f = m * ratio_; f < (m + 1) * ratio_; ++f) {
      RngStream rng = root_.split(static_cast<std::uint64_t>(f));
      sum += draw_increments(n_, dim_, fine_tau_, rng);
    }
    return sum;
  }

 private:
  RngStream root_;
  Index n_;
  Index dim_;
  Scalar fine_tau_;
  Index ratio_;
};

/// Number of steps of width tau covering [0, t_end]: ceil(t_end / tau),
/// with a relative slack so exact multiples are not rounded up.
template <class Scalar>
Index step_count(Scalar t_end, Scalar tau) {
  if (!(tau > 0)) throw std::invalid_argument("tau must be > 0");
  if (!(t_end >= 0)) throw std::invalid_argument("t_end must be >= 0");
  return static_cast<Index>(std::ceil(t_end / tau - 1e-9));
}

/// Drives an ensemble through a number of physical steps.
///
/// Step m draws its batches from derive_stream(seed, kBatches).split(m) and
/// its noise from a BrownianIncrements grid refined `noise_ratio` times, so
/// the outcome depends only on (seed, tau, noise_ratio), never on the
/// thread count. For rbm_r one physical step is ceil(N/p) single-batch
/// iterations. Time after step m is exactly (m+1) tau.
template <class Scalar>
class Simulation {
 public:
  using Observer = std::function<void(Index step, const ParticleEnsemble<Scalar>&)>;

  Simulation(InteractionModel<Scalar> model, StepScheme scheme, Scalar tau, std::uint64_t seed, Index noise_ratio = 1)
      : model_(std::move(model)), scheme_(scheme), tau_(tau), seed_(seed), noise_ratio_(noise_ratio) {
    if (!(tau > 0)) throw std::invalid_argument("tau must be > 0");
    if (noise_ratio < 1) throw std::invalid_argument("noise refinement ratio must be >= 1");
  }

  const InteractionModel<Scalar>& model() const noexcept { return model_; }
  const StepScheme& scheme() const noexcept { return scheme_; }
  Scalar tau() const noexcept { return tau_; }

  /// Advances `e` by `steps` steps starting at step index `first`. The
  /// observer, if any, sees the ensemble after every step.
  ParticleEnsemble<Scalar> run(ParticleEnsemble<Scalar> e, Index steps, const Observer& observe = {},
                               Index first = 0) const {
    validate(e);
    validate_scheme(scheme_, model_, e.size());
    if (e.dim() != model_.dim) throw std::invalid_argument("ensemble dimension differs from model dimension");
    if (model_.second_order && !e.velocities) throw std::invalid_argument("second-order model needs velocities");
    if (model_.adjacency && model_.adjacency->size() != e.size())
      throw std::invalid_argument("adjacency size differs from particle count");

    const bool shared_noise = model_.noise.active() &&
                              (scheme_.kind == SchemeKind::rbm1 || scheme_.kind == SchemeKind::full) &&
                              scheme_.intra != IntraKind::verlet;
    const BrownianIncrements<Scalar> noise(seed_, e.size(), e.dim(), tau_ / static_cast<Scalar>(noise_ratio_),
                                           noise_ratio_);
    const RngStream batch_root = derive_stream(seed_, streams::kBatches);
    const CoordMatrix<Scalar> none;

    for (Index m = first; m < first + steps; ++m) {
      RngStream rng = batch_root.split(static_cast<std::uint64_t>(m));
      try {
        const CoordMatrix<Scalar> inc = shared_noise ? noise.step(m) : none;
        switch (scheme_.kind) {
          case SchemeKind::rbm1:
            e = rbm1_step(std::move(e), model_, scheme_, tau_, rng, inc);
            break;
          case SchemeKind::full:
            e = full_step(std::move(e), model_, scheme_, tau_, rng, inc);
            break;
          case SchemeKind::rbm_r: {
            const Index inner = sweep_batch_count(e.size(), scheme_.batch_size);
            for (Index k = 0; k < inner; ++k) e = rbm_r_step(std::move(e), model_, scheme_, tau_, rng);
            break;
          }
          case SchemeKind::rbm_r_prime:
            e = rbm_r_prime_sweep(std::move(e), model_, scheme_, tau_, rng);
            break;
        }
      } catch (const NonFiniteError& err) {
        throw NonFiniteError(err.particle(), static_cast<long long>(m));
      }
      e.time = static_cast<Scalar>(m + 1) * tau_;
      if (observe) observe(m, e);
    }
    return e;
  }

 private:
  InteractionModel<Scalar> model_;
  StepScheme scheme_;
  Scalar tau_;
  std::uint64_t seed_;
  Index noise_ratio_;
};

}  // namespace rbm
